#pragma once

// JSON and CSV forms of simulation reports and boundary schedules. Every JSON
// form parses back into an equal structure.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "boundaries.hpp"
#include "config.hpp"
#include "mcsim.hpp"

namespace seqcombine::report {

using nlohmann::json;

inline constexpr int kReportVersion = 1;

json to_json(const mcsim::SimReport& r);
mcsim::SimReport sim_report_from_json(const json& j);

struct StudyDocument {
  config::RunConfig config;
  std::vector<mcsim::SimReport> studies;

  friend bool operator==(const StudyDocument&, const StudyDocument&) = default;
};

json to_json(const StudyDocument& doc);
// Throws SchemaError on a malformed or wrong-version document.
StudyDocument study_from_json(const json& j);

// One row per scenario x test: rate, avg_analyses and mc_se with counts.
std::string results_csv(const std::vector<mcsim::SimReport>& studies);
// Long-format standardized covariance entries of complete-path runs.
std::string standardized_cov_csv(const std::vector<mcsim::SimReport>& studies);

json to_json(const boundaries::BoundarySchedule& s);
boundaries::BoundarySchedule schedule_from_json(const json& j);

json matrix_to_json(const matrix::SymMatrix& m);
matrix::SymMatrix matrix_from_json(const json& j);

// Square numeric CSV, one matrix row per line; '#' lines are comments.
// Throws SchemaError.
matrix::SymMatrix parse_matrix_csv(const std::string& text);

// Boundary command: plan is {alpha, cumulative, method?, seed?, grid_points?,
// qmc_shifts?, qmc_points?}; method "auto" (default) uses the grid recursion
// when the covariance has independent increments. The result carries the
// schedule, the seed and the achieved crossing probabilities.
json boundaries_command(const matrix::SymMatrix& cov, const json& plan, std::optional<std::uint64_t> seed);

// Fixed-precision decimal used in every CSV cell.
std::string format_number(double x, int digits = 6);

void write_file(const std::string& path, const std::string& contents);

}  // namespace seqcombine::report

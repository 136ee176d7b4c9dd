#pragma once

// Sequential analysis of an observed dataset, one look at a time. The state
// file records every look's frozen quantities together with a digest of the
// data seen at that look, so a later call can confirm that the earlier looks
// were computed from the same data.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mcsim.hpp"
#include "survdata.hpp"

namespace seqcombine::analyze {

using nlohmann::json;

inline constexpr int kStateVersion = 1;

// CSV with header entry_time,event_time,arm. event_time is measured from
// entry; empty, "inf" or "NA" means no event observed. Throws SchemaError.
std::vector<survdata::Subject> parse_dataset(const std::string& text);
std::vector<survdata::Subject> read_dataset(const std::string& path);

// Hex digest of the administratively censored data at one look.
std::string data_digest(const survdata::InterimView& view);

struct LookResult {
  std::size_t look = 0;  // 1-based
  double t = 0.0;
  std::size_t enrolled = 0;
  std::size_t events = 0;
  std::string digest;
  std::string decision;  // continue, reject, accept, skip, stopped
  double statistic = 0.0;
  double z = 0.0;
  double boundary = 0.0;
  std::vector<double> cov_row;    // frozen entries (l, j) for l <= j of the source statistics
  std::vector<double> direction;  // b through this look; empty for unmodified tests

  friend bool operator==(const LookResult&, const LookResult&) = default;
};

struct AnalysisState {
  mcsim::TestSpec test;
  mcsim::Design design;
  std::uint64_t seed = 0;  // master seed; the boundary solver seed derives from it
  std::vector<LookResult> looks;

  friend bool operator==(const AnalysisState&, const AnalysisState&) = default;
};

json to_json(const AnalysisState& s);
// Throws SchemaError on a malformed document or an unsupported version.
AnalysisState state_from_json(const json& j);

// Runs looks 1..look. With a previous state, its test, design and seed must
// match and every look it shares with this run must have identical data and
// frozen quantities (StateMismatch otherwise). The returned state keeps any
// later looks of the previous one. Numeric failures propagate with their code.
AnalysisState run(const std::vector<survdata::Subject>& subjects, const mcsim::Design& design,
                  const mcsim::TestSpec& test, std::size_t look, std::uint64_t seed,
                  const AnalysisState* previous = nullptr);

}  // namespace seqcombine::analyze

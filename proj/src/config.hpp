#pragma once

// Run configuration for simulation, analysis and boundary commands, read
// from JSON. Every parse failure raises ConfigInvalid naming the field.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "boundaries.hpp"
#include "mcsim.hpp"
#include "survdata.hpp"

namespace seqcombine::config {

using nlohmann::json;

struct ScenarioEntry {
  std::string name;
  survdata::Family family = survdata::Family::Null;
  double delta = 0.0;
  double t_delay = 0.0;

  friend bool operator==(const ScenarioEntry&, const ScenarioEntry&) = default;
};

struct RunConfig {
  mcsim::Design design;
  std::optional<double> t_delay;  // default for tests that need one
  std::vector<ScenarioEntry> scenarios;
  std::vector<mcsim::TestSpec> tests;
  std::size_t reps = 10000;
  std::uint64_t seed = 20240601;
  std::size_t threads = 1;
  mcsim::RunMode mode = mcsim::RunMode::Monitor;
  std::string out_dir = "out";

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

const char* to_string(mcsim::RunMode mode) noexcept;
mcsim::RunMode parse_run_mode(const std::string& s);

json design_to_json(const mcsim::Design& d);
mcsim::Design design_from_json(const json& j, const std::string& where = "design");

json plan_to_json(const boundaries::SpendingPlan& p);
boundaries::SpendingPlan plan_from_json(const json& j, const std::string& where = "spending");

json test_to_json(const mcsim::TestSpec& t);
mcsim::TestSpec test_from_json(const json& j, std::optional<double> default_delay, const std::string& where);

json scenario_to_json(const survdata::ScenarioSpec& s);
survdata::ScenarioSpec scenario_from_json(const json& j, const std::string& where);

json to_json(const RunConfig& c);
// Validates the result, including the design and every test.
RunConfig from_json(const json& j);

json read_json_file(const std::string& path, const std::string& what);
RunConfig load(const std::string& path);

// Keeps only the scenarios and tests whose names match; an empty filter keeps
// everything. An unmatched name raises ConfigInvalid.
void select(RunConfig& c, const std::vector<std::string>& scenarios, const std::vector<std::string>& tests);

}  // namespace seqcombine::config

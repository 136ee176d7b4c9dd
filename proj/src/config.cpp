#include "config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "error.hpp"

namespace seqcombine::config {

namespace {

[[noreturn]] void invalid(const std::string& field, const std::string& why) {
  fail(ErrorCode::ConfigInvalid, field + ": " + why);
}

// Object reader that rejects unknown keys so misspelt fields do not pass
// silently.
class Fields {
 public:
  Fields(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) invalid(where_, "expected an object");
  }

  std::string path(const std::string& key) const { return where_ + "." + key; }
  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key) && !j_.at(key).is_null();
  }
  const json& at(const std::string& key) {
    if (!has(key)) invalid(path(key), "is required");
    return j_.at(key);
  }

  double number(const std::string& key) {
    const json& v = at(key);
    if (!v.is_number()) invalid(path(key), "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) invalid(path(key), "must be finite");
    return x;
  }
  double number(const std::string& key, double fallback) { return has(key) ? number(key) : fallback; }

  std::uint64_t unsigned_int(const std::string& key) {
    const json& v = at(key);
    if (!v.is_number_unsigned()) {
      if (v.is_number_integer()) invalid(path(key), "must be nonnegative");
      invalid(path(key), "expected a nonnegative integer");
    }
    return v.get<std::uint64_t>();
  }
  std::uint64_t unsigned_int(const std::string& key, std::uint64_t fallback) {
    return has(key) ? unsigned_int(key) : fallback;
  }

  std::string text(const std::string& key) {
    const json& v = at(key);
    if (!v.is_string()) invalid(path(key), "expected a string");
    return v.get<std::string>();
  }
  std::string text(const std::string& key, const std::string& fallback) { return has(key) ? text(key) : fallback; }

  std::vector<double> numbers(const std::string& key) {
    const json& v = at(key);
    if (!v.is_array()) invalid(path(key), "expected an array of numbers");
    std::vector<double> out;
    for (const auto& e : v) {
      if (!e.is_number()) invalid(path(key), "expected an array of numbers");
      out.push_back(e.get<double>());
      if (!std::isfinite(out.back())) invalid(path(key), "entries must be finite");
    }
    return out;
  }

  void finish() const {
    for (const auto& [key, value] : j_.items())
      if (!seen_.count(key)) invalid(path(key), "unknown field");
  }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

// Runs a validator that throws InvalidSpec and rethrows it as ConfigInvalid.
template <class F>
void as_config_error(const std::string& where, F&& f) {
  try {
    f();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::InvalidSpec || e.code() == ErrorCode::ConfigInvalid) invalid(where, e.what());
    throw;
  }
}

}  // namespace

const char* to_string(mcsim::RunMode mode) noexcept {
  return mode == mcsim::RunMode::Monitor ? "monitor" : "complete-paths";
}

mcsim::RunMode parse_run_mode(const std::string& s) {
  if (s == "monitor") return mcsim::RunMode::Monitor;
  if (s == "complete-paths") return mcsim::RunMode::CompletePaths;
  invalid("mode", "must be 'monitor' or 'complete-paths', got '" + s + "'");
}

json plan_to_json(const boundaries::SpendingPlan& p) {
  return json{{"alpha", p.alpha}, {"cumulative", p.cumulative}};
}

boundaries::SpendingPlan plan_from_json(const json& j, const std::string& where) {
  Fields f(j, where);
  boundaries::SpendingPlan p;
  p.alpha = f.number("alpha", p.alpha);
  p.cumulative = f.numbers("cumulative");
  f.finish();
  as_config_error(where, [&] { p.validate(); });
  return p;
}

json design_to_json(const mcsim::Design& d) {
  json j{{"analysis_times", d.analysis_times},
         {"spending", plan_to_json(d.plan)},
         {"rmst_offset", d.rmst_offset},
         {"n", d.n},
         {"pi", d.pi},
         {"entry_max", d.entry_max},
         {"grid_points", d.grid_points},
         {"qmc_shifts", d.qmc_shifts},
         {"qmc_points", d.qmc_points},
         {"covariance_source", mcsim::to_string(d.covariance_source)}};
  if (!d.restrictions.empty()) j["restrictions"] = d.restrictions;
  return j;
}

mcsim::Design design_from_json(const json& j, const std::string& where) {
  Fields f(j, where);
  mcsim::Design d;
  if (f.has("analysis_times")) d.analysis_times = f.numbers("analysis_times");
  if (f.has("spending")) d.plan = plan_from_json(f.at("spending"), f.path("spending"));
  if (f.has("restrictions")) d.restrictions = f.numbers("restrictions");
  d.rmst_offset = f.number("rmst_offset", d.rmst_offset);
  d.n = f.unsigned_int("n", d.n);
  d.pi = f.number("pi", d.pi);
  d.entry_max = f.number("entry_max", d.entry_max);
  d.grid_points = f.unsigned_int("grid_points", d.grid_points);
  d.qmc_shifts = f.unsigned_int("qmc_shifts", d.qmc_shifts);
  d.qmc_points = f.unsigned_int("qmc_points", d.qmc_points);
  if (f.has("covariance_source")) {
    const std::string s = f.text("covariance_source");
    as_config_error(f.path("covariance_source"), [&] { d.covariance_source = mcsim::parse_covariance_source(s); });
  }
  f.finish();
  // Design::validate names the field first; prefix it with the section.
  as_config_error(where, [&] { d.validate(); });
  return d;
}

json test_to_json(const mcsim::TestSpec& t) {
  json j{{"family", t.name()}};
  if (t.t_delay) j["t_delay"] = *t.t_delay;
  return j;
}

mcsim::TestSpec test_from_json(const json& j, std::optional<double> default_delay, const std::string& where) {
  mcsim::TestSpec t;
  if (j.is_string()) {
    as_config_error(where, [&] { t.family = mcsim::parse_test_family(j.get<std::string>()); });
  } else {
    Fields f(j, where);
    const std::string name = f.text("family");
    as_config_error(f.path("family"), [&] { t.family = mcsim::parse_test_family(name); });
    if (f.has("t_delay")) t.t_delay = f.number("t_delay");
    f.finish();
  }
  if (t.needs_t_delay() && !t.t_delay) t.t_delay = default_delay;
  if (!t.needs_t_delay()) t.t_delay.reset();
  if (t.needs_t_delay() && !t.t_delay) invalid(where + ".t_delay", t.name() + " requires t_delay");
  as_config_error(where, [&] { t.validate(); });
  return t;
}

json scenario_to_json(const survdata::ScenarioSpec& s) {
  return json{{"n", s.n},         {"pi", s.pi},       {"entry_max", s.entry_max},
              {"family", survdata::to_string(s.family)}, {"delta", s.delta}, {"t_delay", s.t_delay}};
}

survdata::ScenarioSpec scenario_from_json(const json& j, const std::string& where) {
  Fields f(j, where);
  survdata::ScenarioSpec s;
  s.n = f.unsigned_int("n", s.n);
  s.pi = f.number("pi", s.pi);
  s.entry_max = f.number("entry_max", s.entry_max);
  const std::string family = f.text("family");
  as_config_error(f.path("family"), [&] { s.family = survdata::parse_family(family); });
  s.delta = f.number("delta", 0.0);
  s.t_delay = f.number("t_delay", 0.0);
  f.finish();
  as_config_error(where, [&] { survdata::validate(s); });
  return s;
}

json to_json(const RunConfig& c) {
  json scenarios = json::array();
  for (const auto& s : c.scenarios)
    scenarios.push_back(
        json{{"name", s.name}, {"family", survdata::to_string(s.family)}, {"delta", s.delta}, {"t_delay", s.t_delay}});
  json tests = json::array();
  for (const auto& t : c.tests) tests.push_back(test_to_json(t));
  json j{{"design", design_to_json(c.design)},
         {"scenarios", scenarios},
         {"tests", tests},
         {"reps", c.reps},
         {"seed", c.seed},
         {"threads", c.threads},
         {"mode", to_string(c.mode)},
         {"out", c.out_dir}};
  if (c.t_delay) j["t_delay"] = *c.t_delay;
  return j;
}

RunConfig from_json(const json& j) {
  Fields f(j, "config");
  RunConfig c;
  if (f.has("design")) c.design = design_from_json(f.at("design"), "design");
  if (f.has("t_delay")) {
    c.t_delay = f.number("t_delay");
    if (*c.t_delay < 0.0) invalid("t_delay", "must be >= 0");
  }
  if (f.has("scenarios")) {
    const json& arr = f.at("scenarios");
    if (!arr.is_array()) invalid("scenarios", "expected an array");
    std::set<std::string> names;
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string where = "scenarios[" + std::to_string(i) + "]";
      Fields s(arr[i], where);
      ScenarioEntry e;
      e.name = s.text("name");
      const std::string family = s.text("family");
      as_config_error(s.path("family"), [&] { e.family = survdata::parse_family(family); });
      e.delta = s.number("delta", 0.0);
      e.t_delay = s.number("t_delay", 0.0);
      s.finish();
      if (e.t_delay < 0.0) invalid(s.path("t_delay"), "must be >= 0");
      if (e.family == survdata::Family::Null && e.delta != 0.0) invalid(s.path("delta"), "must be 0 under the null");
      if (!names.insert(e.name).second) invalid(s.path("name"), "duplicate scenario name '" + e.name + "'");
      c.scenarios.push_back(e);
    }
  }
  if (f.has("tests")) {
    const json& arr = f.at("tests");
    if (!arr.is_array()) invalid("tests", "expected an array");
    if (arr.empty()) invalid("tests", "at least one test is required");
    for (std::size_t i = 0; i < arr.size(); ++i)
      c.tests.push_back(test_from_json(arr[i], c.t_delay, "tests[" + std::to_string(i) + "]"));
  } else {
    if (!c.t_delay) invalid("t_delay", "the default test roster includes wilcoxon-IV and rmst-III, which require t_delay");
    c.tests = mcsim::standard_tests(*c.t_delay);
  }
  c.reps = f.unsigned_int("reps", c.reps);
  if (c.reps < 1) invalid("reps", "must be at least 1");
  c.seed = f.unsigned_int("seed", c.seed);
  c.threads = f.unsigned_int("threads", c.threads);
  if (c.threads < 1) invalid("threads", "must be at least 1");
  if (f.has("mode")) c.mode = parse_run_mode(f.text("mode"));
  c.out_dir = f.text("out", c.out_dir);
  f.finish();
  return c;
}

json read_json_file(const std::string& path, const std::string& what) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open " + what + " '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorCode::ConfigInvalid, what + " '" + path + "' is not valid JSON: " + e.what());
  }
}

RunConfig load(const std::string& path) { return from_json(read_json_file(path, "config")); }

void select(RunConfig& c, const std::vector<std::string>& scenarios, const std::vector<std::string>& tests) {
  if (!scenarios.empty()) {
    std::vector<ScenarioEntry> kept;
    for (const auto& name : scenarios) {
      auto it = std::find_if(c.scenarios.begin(), c.scenarios.end(), [&](const auto& s) { return s.name == name; });
      if (it == c.scenarios.end()) invalid("scenario", "no scenario named '" + name + "' in the config");
      kept.push_back(*it);
    }
    c.scenarios = std::move(kept);
  }
  if (!tests.empty()) {
    std::vector<mcsim::TestSpec> kept;
    for (const auto& name : tests) {
      bool found = false;
      for (const auto& t : c.tests)
        if (t.name() == name) {
          kept.push_back(t);
          found = true;
        }
      if (!found) {
        // Tests outside the configured roster are allowed when fully specified.
        mcsim::TestSpec t = test_from_json(json(name), c.t_delay, "test");
        kept.push_back(t);
      }
    }
    c.tests = std::move(kept);
  }
}

}  // namespace seqcombine::config

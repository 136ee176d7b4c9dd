#include "seqcombine/seqcombine.h"

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>
#include <new>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "analyze.hpp"
#include "boundaries.hpp"
#include "config.hpp"
#include "error.hpp"
#include "indinc.hpp"
#include "mcsim.hpp"
#include "report.hpp"

using namespace seqcombine;

struct seqc_config {
  config::RunConfig run;
  std::vector<std::string> scenarios;
  std::vector<std::string> tests;
};

struct seqc_report {
  report::StudyDocument doc;
};

namespace {

thread_local std::string last_error;

seqc_status status_of(ErrorCode code) {
  return static_cast<seqc_status>(static_cast<int>(code) + 1);
}

seqc_status failure(seqc_status s, const std::string& message) {
  last_error = message;
  return s;
}

// Runs f, translating exceptions into a status and the thread's last error.
template <class F>
seqc_status guarded(F&& f) {
  try {
    f();
    last_error.clear();
    return SEQC_OK;
  } catch (const Error& e) {
    return failure(status_of(e.code()), std::string(to_string(e.code())) + ": " + e.what());
  } catch (const std::bad_alloc&) {
    return failure(SEQC_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return failure(SEQC_INTERNAL, e.what());
  }
}

char* duplicate(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

std::string read_text(const std::string& path, const char* what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, std::string("cannot open ") + what + " '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

boundaries::SpendingPlan plan_from(const double* cumulative, std::size_t looks, double alpha) {
  boundaries::SpendingPlan plan;
  plan.alpha = alpha;
  plan.cumulative.assign(cumulative, cumulative + looks);
  return plan;
}

matrix::SymMatrix square(const double* rows, std::size_t dim) {
  return matrix::SymMatrix::from_rows(std::span<const double>(rows, dim * dim), dim);
}

#define SEQC_REQUIRE(...)                                                         \
  do {                                                                            \
    const void* ptrs[] = {__VA_ARGS__};                                           \
    for (const void* p : ptrs)                                                    \
      if (!p) return failure(SEQC_NULL_ARGUMENT, "a required argument is NULL"); \
  } while (0)

}  // namespace

extern "C" {

const char* seqc_version(void) { return "0.1.0"; }

const char* seqc_status_name(seqc_status status) {
  switch (status) {
    case SEQC_OK: return "Ok";
    case SEQC_NULL_ARGUMENT: return "NullArgument";
    case SEQC_INTERNAL: return "Internal";
    default:
      if (status > SEQC_OK && status < SEQC_NULL_ARGUMENT)
        return to_string(static_cast<ErrorCode>(static_cast<int>(status) - 1));
      return "Unknown";
  }
}

int seqc_exit_code(seqc_status status) {
  switch (status) {
    case SEQC_OK: return 0;
    case SEQC_NULL_ARGUMENT: return 2;
    case SEQC_INTERNAL: return 4;
    default:
      if (status > SEQC_OK && status < SEQC_NULL_ARGUMENT)
        return exit_status(static_cast<ErrorCode>(static_cast<int>(status) - 1));
      return 4;
  }
}

const char* seqc_last_error(void) { return last_error.c_str(); }

void seqc_string_free(char* s) { std::free(s); }

seqc_status seqc_config_load(const char* path, seqc_config** out) {
  SEQC_REQUIRE(path, out);
  *out = nullptr;
  return guarded([&] { *out = new seqc_config{config::load(path), {}, {}}; });
}

seqc_status seqc_config_parse(const char* json_text, seqc_config** out) {
  SEQC_REQUIRE(json_text, out);
  *out = nullptr;
  return guarded([&] {
    config::json j;
    try {
      j = config::json::parse(json_text);
    } catch (const config::json::exception& e) {
      fail(ErrorCode::ConfigInvalid, std::string("config is not valid JSON: ") + e.what());
    }
    *out = new seqc_config{config::from_json(j), {}, {}};
  });
}

void seqc_config_free(seqc_config* config) { delete config; }

seqc_status seqc_config_set_seed(seqc_config* config, uint64_t seed) {
  SEQC_REQUIRE(config);
  return guarded([&] { config->run.seed = seed; });
}

seqc_status seqc_config_set_threads(seqc_config* config, size_t threads) {
  SEQC_REQUIRE(config);
  if (threads < 1) return failure(SEQC_CONFIG_INVALID, "ConfigInvalid: threads: must be at least 1");
  return guarded([&] { config->run.threads = threads; });
}

seqc_status seqc_config_set_out_dir(seqc_config* config, const char* dir) {
  SEQC_REQUIRE(config, dir);
  return guarded([&] { config->run.out_dir = dir; });
}

seqc_status seqc_config_select_scenario(seqc_config* config, const char* name) {
  SEQC_REQUIRE(config, name);
  return guarded([&] { config->scenarios.emplace_back(name); });
}

seqc_status seqc_config_select_test(seqc_config* config, const char* name) {
  SEQC_REQUIRE(config, name);
  return guarded([&] { config->tests.emplace_back(name); });
}

seqc_status seqc_config_seed(const seqc_config* config, uint64_t* seed) {
  SEQC_REQUIRE(config, seed);
  return guarded([&] { *seed = config->run.seed; });
}

seqc_status seqc_config_threads(const seqc_config* config, size_t* threads) {
  SEQC_REQUIRE(config, threads);
  return guarded([&] { *threads = config->run.threads; });
}

seqc_status seqc_config_out_dir(const seqc_config* config, char** dir) {
  SEQC_REQUIRE(config, dir);
  return guarded([&] { *dir = duplicate(config->run.out_dir); });
}

seqc_status seqc_config_to_json(const seqc_config* config, char** json_text) {
  SEQC_REQUIRE(config, json_text);
  return guarded([&] { *json_text = duplicate(config::to_json(config->run).dump(2)); });
}

seqc_status seqc_simulate(const seqc_config* config, seqc_report** out) {
  SEQC_REQUIRE(config, out);
  *out = nullptr;
  return guarded([&] {
    config::RunConfig run = config->run;
    config::select(run, config->scenarios, config->tests);
    if (run.scenarios.empty()) fail(ErrorCode::ConfigInvalid, "scenarios: at least one scenario is required");
    auto result = std::make_unique<seqc_report>();
    result->doc.config = run;
    mcsim::StudyOptions options;
    options.reps = run.reps;
    options.seed = run.seed;
    options.threads = run.threads;
    options.mode = run.mode;
    for (const auto& s : run.scenarios) {
      const auto spec = mcsim::scenario_for(run.design, s.family, s.delta, s.t_delay);
      result->doc.studies.push_back(mcsim::run_study(s.name, spec, run.design, run.tests, options));
    }
    *out = result.release();
  });
}

void seqc_report_free(seqc_report* report) { delete report; }

seqc_status seqc_report_rows(const seqc_report* report, size_t* rows) {
  SEQC_REQUIRE(report, rows);
  return guarded([&] {
    *rows = 0;
    for (const auto& s : report->doc.studies) *rows += s.tests.size();
  });
}

seqc_status seqc_report_json(const seqc_report* report, char** json_text) {
  SEQC_REQUIRE(report, json_text);
  return guarded([&] { *json_text = duplicate(report::to_json(report->doc).dump(2)); });
}

seqc_status seqc_report_csv(const seqc_report* report, char** csv_text) {
  SEQC_REQUIRE(report, csv_text);
  return guarded([&] { *csv_text = duplicate(report::results_csv(report->doc.studies)); });
}

seqc_status seqc_report_write(const seqc_report* report, const char* dir) {
  SEQC_REQUIRE(report, dir);
  return guarded([&] {
    const std::filesystem::path base(dir);
    report::write_file((base / "report.json").string(), report::to_json(report->doc).dump(2) + "\n");
    report::write_file((base / "report.csv").string(), report::results_csv(report->doc.studies));
    if (report->doc.config.mode == mcsim::RunMode::CompletePaths)
      report::write_file((base / "standardized_cov.csv").string(), report::standardized_cov_csv(report->doc.studies));
  });
}

seqc_status seqc_indinc_boundaries(const double* variances, size_t looks, const double* cumulative, double alpha,
                                   double* critical) {
  SEQC_REQUIRE(variances, cumulative, critical);
  return guarded([&] {
    const auto plan = plan_from(cumulative, looks, alpha);
    const auto s = boundaries::indinc_boundaries(std::span<const double>(variances, looks), plan);
    for (std::size_t j = 0; j < s.steps.size(); ++j) critical[j] = s.steps[j].c;
  });
}

seqc_status seqc_mvn_boundaries(const double* corr, size_t looks, const double* cumulative, double alpha,
                                uint64_t seed, double* critical) {
  SEQC_REQUIRE(corr, cumulative, critical);
  return guarded([&] {
    const auto plan = plan_from(cumulative, looks, alpha);
    const auto s = boundaries::mvn_boundaries(square(corr, looks), plan, 0, seed);
    for (std::size_t j = 0; j < s.steps.size(); ++j) critical[j] = s.steps[j].c;
  });
}

seqc_status seqc_mvn_rectangle(const double* lower, const double* upper, const double* corr, size_t dim,
                               uint64_t seed, double* probability, double* error) {
  SEQC_REQUIRE(lower, upper, corr, probability);
  return guarded([&] {
    const auto r = boundaries::mvn_rectangle(std::span<const double>(lower, dim), std::span<const double>(upper, dim),
                                             square(corr, dim), seed);
    *probability = r.probability;
    if (error) *error = r.error;
  });
}

seqc_status seqc_boundaries_files(const char* cov_csv_path, const char* plan_json_path, const uint64_t* seed,
                                  char** json_text) {
  SEQC_REQUIRE(cov_csv_path, plan_json_path, json_text);
  return guarded([&] {
    const auto cov = report::parse_matrix_csv(read_text(cov_csv_path, "covariance CSV"));
    const auto plan = config::read_json_file(plan_json_path, "plan");
    std::optional<std::uint64_t> s;
    if (seed) s = *seed;
    *json_text = duplicate(report::boundaries_command(cov, plan, s).dump(2));
  });
}

seqc_status seqc_combine(const double* x, const double* cov, const double* direction, size_t looks, double* y,
                         double* variance, double* z) {
  SEQC_REQUIRE(x, cov, direction, y);
  return guarded([&] {
    const auto r = indinc::combine(std::span<const double>(x, looks), square(cov, looks),
                                   std::span<const double>(direction, looks));
    *y = r.y;
    if (variance) *variance = r.variance;
    if (z) *z = r.z;
  });
}

seqc_status seqc_analyze(const char* dataset_path, const seqc_config* config, const char* test_name, size_t look,
                         const char* state_path, char** json_text) {
  SEQC_REQUIRE(dataset_path, config, test_name, json_text);
  return guarded([&] {
    config::RunConfig run = config->run;
    config::select(run, {}, {test_name});
    if (run.tests.size() != 1)
      fail(ErrorCode::ConfigInvalid, std::string("test: '") + test_name + "' matches more than one configured test");
    const auto subjects = analyze::read_dataset(dataset_path);
    std::optional<analyze::AnalysisState> previous;
    if (state_path && std::filesystem::exists(state_path)) {
      analyze::json j;
      try {
        j = analyze::json::parse(read_text(state_path, "state file"));
      } catch (const analyze::json::exception& e) {
        fail(ErrorCode::SchemaError, std::string("state file is not valid JSON: ") + e.what());
      }
      previous = analyze::state_from_json(j);
    }
    const auto state = analyze::run(subjects, run.design, run.tests.front(), look, run.seed,
                                    previous ? &*previous : nullptr);
    if (state_path) report::write_file(state_path, analyze::to_json(state).dump(2) + "\n");
    analyze::AnalysisState shown = state;
    shown.looks.resize(look);
    *json_text = duplicate(analyze::to_json(shown).dump(2));
  });
}

}  // extern "C"

// seqcombine command line: simulate, analyze, boundaries.

#include <seqcombine/seqcombine.h>

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace {

using nlohmann::json;

struct CString {
  char* p = nullptr;
  ~CString() { seqc_string_free(p); }
  std::string str() const { return p ? p : ""; }
};

using ConfigPtr = std::unique_ptr<seqc_config, decltype(&seqc_config_free)>;
using ReportPtr = std::unique_ptr<seqc_report, decltype(&seqc_report_free)>;

// Prints the failure and returns its exit code; 0 when status is OK.
int report_status(seqc_status s) {
  if (s == SEQC_OK) return 0;
  std::cerr << "error: " << seqc_last_error() << "\n";
  return seqc_exit_code(s);
}

#define TRY(expr)                               \
  do {                                          \
    if (int rc_ = report_status(expr)) return rc_; \
  } while (0)

std::optional<std::size_t> threads_from_env() {
  const char* v = std::getenv("SEQCOMBINE_THREADS");
  if (!v || !*v) return std::nullopt;
  char* end = nullptr;
  const unsigned long long n = std::strtoull(v, &end, 10);
  if (*end != '\0' || n == 0) return std::nullopt;
  return static_cast<std::size_t>(n);
}

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads;
};

int load_config(const Common& c, ConfigPtr& out) {
  seqc_config* raw = nullptr;
  const seqc_status s = seqc_config_load(c.config.c_str(), &raw);
  out.reset(raw);
  TRY(s);
  if (c.seed) TRY(seqc_config_set_seed(raw, *c.seed));
  std::optional<std::size_t> threads = c.threads;
  if (!threads) threads = threads_from_env();
  if (threads) TRY(seqc_config_set_threads(raw, *threads));
  return 0;
}

int cmd_simulate(const Common& common, const std::string& out_dir, const std::vector<std::string>& scenarios,
                 const std::vector<std::string>& tests) {
  ConfigPtr config(nullptr, seqc_config_free);
  if (int rc = load_config(common, config)) return rc;
  if (!out_dir.empty()) TRY(seqc_config_set_out_dir(config.get(), out_dir.c_str()));
  for (const auto& s : scenarios) TRY(seqc_config_select_scenario(config.get(), s.c_str()));
  for (const auto& t : tests) TRY(seqc_config_select_test(config.get(), t.c_str()));

  seqc_report* raw = nullptr;
  const seqc_status s = seqc_simulate(config.get(), &raw);
  ReportPtr report(raw, seqc_report_free);
  TRY(s);
  CString dir;
  TRY(seqc_config_out_dir(config.get(), &dir.p));
  TRY(seqc_report_write(report.get(), dir.p));
  std::size_t rows = 0;
  TRY(seqc_report_rows(report.get(), &rows));
  CString csv;
  TRY(seqc_report_csv(report.get(), &csv.p));
  std::cout << csv.str();
  std::cerr << "wrote " << rows << " rows to " << dir.str() << "/report.csv and report.json\n";
  return 0;
}

std::string join(const json& values, int precision) {
  std::string out;
  char buf[64];
  for (const auto& v : values) {
    std::snprintf(buf, sizeof buf, "%.*g", precision, v.get<double>());
    if (!out.empty()) out += ' ';
    out += buf;
  }
  return out;
}

int cmd_analyze(const Common& common, const std::string& dataset, const std::string& test, std::size_t look,
                const std::string& state, bool as_json) {
  ConfigPtr config(nullptr, seqc_config_free);
  if (int rc = load_config(common, config)) return rc;
  CString result;
  TRY(seqc_analyze(dataset.c_str(), config.get(), test.c_str(), look, state.empty() ? nullptr : state.c_str(),
                   &result.p));
  if (as_json) {
    std::cout << result.str() << "\n";
    return 0;
  }
  const json j = json::parse(result.str());
  std::printf("test %s, seed %llu\n", j["test"]["family"].get<std::string>().c_str(),
              static_cast<unsigned long long>(j["seed"].get<std::uint64_t>()));
  std::printf("%4s %7s %8s %7s %12s %9s %9s  %-9s %s\n", "look", "t", "enrolled", "events", "statistic", "z",
              "boundary", "decision", "frozen cov row | direction");
  for (const auto& l : j["looks"]) {
    std::printf("%4zu %7.3f %8zu %7zu %12.6g %9.4f %9.4f  %-9s %s | %s\n", l["look"].get<std::size_t>(),
                l["t"].get<double>(), l["enrolled"].get<std::size_t>(), l["events"].get<std::size_t>(),
                l["statistic"].get<double>(), l["z"].get<double>(), l["boundary"].get<double>(),
                l["decision"].get<std::string>().c_str(), join(l["cov_row"], 6).c_str(),
                join(l["direction"], 6).c_str());
  }
  return 0;
}

int cmd_boundaries(const std::string& cov, const std::string& plan, std::optional<std::uint64_t> seed,
                   const std::string& out) {
  CString result;
  const std::uint64_t seed_value = seed.value_or(0);
  TRY(seqc_boundaries_files(cov.c_str(), plan.c_str(), seed ? &seed_value : nullptr, &result.p));
  if (out.empty()) {
    std::cout << result.str() << "\n";
  } else {
    std::ofstream f(out, std::ios::binary | std::ios::trunc);
    if (!(f << result.str() << "\n")) {
      std::cerr << "error: IoError: cannot write '" << out << "'\n";
      return 3;
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sequential combination tests for group sequential survival trials"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(seqc_version()));

  Common common;
  auto add_common = [&](CLI::App* sub, bool config_required) {
    auto* opt = sub->add_option("--config", common.config, "run configuration (JSON)");
    if (config_required) opt->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", common.seed, "master seed, overrides the config");
    sub->add_option("--threads", common.threads, "worker threads (fallback: SEQCOMBINE_THREADS)")
        ->check(CLI::PositiveNumber);
  };

  auto* simulate = app.add_subcommand("simulate", "run the Monte Carlo study described by a config");
  std::string out_dir;
  std::vector<std::string> scenarios, tests;
  add_common(simulate, true);
  simulate->add_option("--out", out_dir, "output directory (default from the config)");
  simulate->add_option("--scenario", scenarios, "run only these scenarios")->take_all();
  simulate->add_option("--test", tests, "run only these tests")->take_all();

  auto* analyze = app.add_subcommand("analyze", "sequential analysis of a dataset through one look");
  std::string dataset, test, state;
  std::size_t look = 0;
  bool as_json = false;
  add_common(analyze, true);
  analyze->add_option("dataset", dataset, "CSV with entry_time,event_time,arm")->required()->check(CLI::ExistingFile);
  analyze->add_option("--test", test, "test family, e.g. wilcoxon-III")->required();
  analyze->add_option("--look", look, "analyze looks 1..look")->required()->check(CLI::PositiveNumber);
  analyze->add_option("--state", state, "state file carrying frozen quantities between looks");
  analyze->add_flag("--json", as_json, "print the state as JSON");

  auto* bounds = app.add_subcommand("boundaries", "stopping boundaries for a covariance matrix and plan");
  std::string cov_path, plan_path, bounds_out;
  bounds->add_option("cov", cov_path, "covariance CSV, one row per look")->required()->check(CLI::ExistingFile);
  bounds->add_option("plan", plan_path, "spending plan JSON")->required()->check(CLI::ExistingFile);
  bounds->add_option("--seed", common.seed, "QMC seed, overrides the plan");
  bounds->add_option("--out", bounds_out, "write the schedule here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  if (simulate->parsed()) return cmd_simulate(common, out_dir, scenarios, tests);
  if (analyze->parsed()) return cmd_analyze(common, dataset, test, look, state, as_json);
  return cmd_boundaries(cov_path, plan_path, common.seed, bounds_out);
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <seqcombine/seqcombine.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

namespace {

struct Text {
  char* p = nullptr;
  ~Text() { seqc_string_free(p); }
  std::string str() const { return p ? p : ""; }
};

const char* kSmallConfig = R"({
  "design": {"qmc_points": 1024},
  "t_delay": 0.6,
  "scenarios": [{"name": "null", "family": "null", "delta": 0.0},
                {"name": "ph", "family": "proportional", "delta": 0.23}],
  "tests": ["logrank", "wilcoxon-adjusted", {"family": "rmst-III", "t_delay": 0.6}],
  "reps": 8,
  "seed": 11
})";

std::filesystem::path scratch(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("seqc_capi_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("status names and exit codes") {
  CHECK(std::string(seqc_status_name(SEQC_OK)) == "Ok");
  CHECK(std::string(seqc_status_name(SEQC_NOT_POSITIVE_DEFINITE)) == "NotPositiveDefinite");
  CHECK(std::string(seqc_status_name(SEQC_IO_ERROR)) == "IoError");
  CHECK(seqc_exit_code(SEQC_OK) == 0);
  CHECK(seqc_exit_code(SEQC_CONFIG_INVALID) == 2);
  CHECK(seqc_exit_code(SEQC_SCHEMA_ERROR) == 3);
  CHECK(seqc_exit_code(SEQC_NOT_POSITIVE_DEFINITE) == 4);
  CHECK(std::strlen(seqc_version()) > 0);
}

TEST_CASE("null arguments are reported, not dereferenced") {
  CHECK(seqc_config_load(nullptr, nullptr) == SEQC_NULL_ARGUMENT);
  CHECK(std::strlen(seqc_last_error()) > 0);
  double c = 0.0;
  CHECK(seqc_indinc_boundaries(nullptr, 1, nullptr, 0.05, &c) == SEQC_NULL_ARGUMENT);
  seqc_config_free(nullptr);
  seqc_report_free(nullptr);
  seqc_string_free(nullptr);
}

TEST_CASE("boundaries through the C interface") {
  const double v[] = {1, 2, 3, 4, 5};
  const double cum[] = {0.05, 0.1, 0.4, 0.7, 1.0};
  double a[5], b[5];
  REQUIRE(seqc_indinc_boundaries(v, 5, cum, 0.05, a) == SEQC_OK);
  CHECK(std::strlen(seqc_last_error()) == 0);
  CHECK(a[0] == doctest::Approx(3.0233).epsilon(1e-4));
  double corr[25];
  for (int r = 0; r < 5; ++r)
    for (int c = 0; c < 5; ++c) corr[r * 5 + c] = std::sqrt(v[std::min(r, c)] / v[std::max(r, c)]);
  REQUIRE(seqc_mvn_boundaries(corr, 5, cum, 0.05, 3, b) == SEQC_OK);
  for (int j = 0; j < 5; ++j) CHECK(std::fabs(a[j] - b[j]) < 2e-3);

  const double one[] = {1.0};
  const double all[] = {1.0};
  double c1 = 0.0;
  REQUIRE(seqc_indinc_boundaries(one, 1, all, 0.05, &c1) == SEQC_OK);
  CHECK(c1 == doctest::Approx(1.959964).epsilon(5e-5));

  const double bad[] = {1, 2, 2, 1};
  const double cum2[] = {0.5, 1.0};
  CHECK(seqc_mvn_boundaries(bad, 2, cum2, 0.05, 0, b) == SEQC_NOT_POSITIVE_DEFINITE);
  const double decreasing[] = {2, 1};
  CHECK(seqc_indinc_boundaries(decreasing, 2, cum2, 0.05, b) == SEQC_NON_MONOTONE_INFORMATION);
}

TEST_CASE("rectangle and combination") {
  const double lo[] = {-1.959964, -1.959964}, hi[] = {1.959964, 1.959964};
  const double id[] = {1, 0, 0, 1};
  double p = 0.0, err = 0.0;
  REQUIRE(seqc_mvn_rectangle(lo, hi, id, 2, 0, &p, &err) == SEQC_OK);
  CHECK(std::fabs(p - 0.95 * 0.95) < 5e-5);

  const double x[] = {1.0, 2.0, 3.0}, cov[] = {1, 0, 0, 0, 1, 0, 0, 0, 1}, dir[] = {1, 1, 1};
  double y = 0, var = 0, z = 0;
  REQUIRE(seqc_combine(x, cov, dir, 3, &y, &var, &z) == SEQC_OK);
  CHECK(y == doctest::Approx(6.0));
  CHECK(var == doctest::Approx(3.0));
  CHECK(z == doctest::Approx(6.0 / std::sqrt(3.0)));
  const double zero[] = {0, 0, 0};
  CHECK(seqc_combine(x, cov, zero, 3, &y, &var, &z) == SEQC_DEGENERATE_DIRECTION);
}

TEST_CASE("config handle") {
  seqc_config* cfg = nullptr;
  REQUIRE(seqc_config_parse(kSmallConfig, &cfg) == SEQC_OK);
  uint64_t seed = 0;
  CHECK(seqc_config_seed(cfg, &seed) == SEQC_OK);
  CHECK(seed == 11);
  CHECK(seqc_config_set_seed(cfg, 12) == SEQC_OK);
  CHECK(seqc_config_set_threads(cfg, 2) == SEQC_OK);
  size_t threads = 0;
  CHECK(seqc_config_threads(cfg, &threads) == SEQC_OK);
  CHECK(threads == 2);
  CHECK(seqc_config_set_threads(cfg, 0) != SEQC_OK);
  Text json;
  REQUIRE(seqc_config_to_json(cfg, &json.p) == SEQC_OK);
  CHECK(json.str().find("\"seed\": 12") != std::string::npos);
  seqc_config_free(cfg);

  seqc_config* bad = nullptr;
  CHECK(seqc_config_parse("{\"reps\": 0}", &bad) == SEQC_CONFIG_INVALID);
  CHECK(bad == nullptr);
  CHECK(seqc_config_parse("{not json", &bad) == SEQC_CONFIG_INVALID);
  CHECK(seqc_config_load("/nonexistent.json", &bad) == SEQC_IO_ERROR);
  REQUIRE(seqc_config_load(SEQCOMBINE_SOURCE_DIR "/configs/paper_table1.json", &bad) == SEQC_OK);
  seqc_config_free(bad);
}

TEST_CASE("simulation, selection and output files") {
  seqc_config* cfg = nullptr;
  REQUIRE(seqc_config_parse(kSmallConfig, &cfg) == SEQC_OK);
  seqc_report* report = nullptr;
  REQUIRE(seqc_simulate(cfg, &report) == SEQC_OK);
  size_t rows = 0;
  CHECK(seqc_report_rows(report, &rows) == SEQC_OK);
  CHECK(rows == 6);
  Text csv, json;
  REQUIRE(seqc_report_csv(report, &csv.p) == SEQC_OK);
  REQUIRE(seqc_report_json(report, &json.p) == SEQC_OK);
  CHECK(csv.str().rfind("scenario,test,", 0) == 0);
  CHECK(json.str().find("seqcombine-report") != std::string::npos);
  const auto dir = scratch("sim");
  REQUIRE(seqc_report_write(report, dir.string().c_str()) == SEQC_OK);
  CHECK(std::filesystem::exists(dir / "report.csv"));
  CHECK(std::filesystem::exists(dir / "report.json"));
  seqc_report_free(report);

  CHECK(seqc_config_select_scenario(cfg, "ph") == SEQC_OK);
  CHECK(seqc_config_select_test(cfg, "logrank") == SEQC_OK);
  REQUIRE(seqc_simulate(cfg, &report) == SEQC_OK);
  CHECK(seqc_report_rows(report, &rows) == SEQC_OK);
  CHECK(rows == 1);
  Text again;
  REQUIRE(seqc_report_csv(report, &again.p) == SEQC_OK);
  // The selected row is the same as in the full run.
  const std::string full = csv.str(), line = again.str().substr(again.str().find('\n') + 1);
  CHECK(full.find(line) != std::string::npos);
  seqc_report_free(report);

  CHECK(seqc_config_select_scenario(cfg, "nowhere") == SEQC_OK);
  CHECK(seqc_simulate(cfg, &report) == SEQC_CONFIG_INVALID);
  seqc_config_free(cfg);
}

TEST_CASE("boundary files") {
  const auto dir = scratch("bounds");
  std::ofstream(dir / "cov.csv") << "1,1,1\n1,2,2\n1,2,3\n";
  std::ofstream(dir / "plan.json") << R"({"alpha": 0.05, "cumulative": [0.2, 0.5, 1.0]})";
  Text out;
  REQUIRE(seqc_boundaries_files((dir / "cov.csv").string().c_str(), (dir / "plan.json").string().c_str(), nullptr,
                                &out.p) == SEQC_OK);
  CHECK(out.str().find("\"method\": \"indinc\"") != std::string::npos);
  std::ofstream(dir / "bad.csv") << "1,2,0\n2,1,0\n0,0,1\n";
  Text none;
  CHECK(seqc_boundaries_files((dir / "bad.csv").string().c_str(), (dir / "plan.json").string().c_str(), nullptr,
                              &none.p) == SEQC_NOT_POSITIVE_DEFINITE);
  CHECK(none.p == nullptr);
  CHECK(seqc_boundaries_files((dir / "missing.csv").string().c_str(), (dir / "plan.json").string().c_str(), nullptr,
                              &none.p) == SEQC_IO_ERROR);
}

TEST_CASE("analysis with a state file") {
  const auto dir = scratch("analyze");
  {
    std::ofstream data(dir / "data.csv");
    data << "entry_time,event_time,arm\n";
    unsigned x = 1;
    for (int i = 0; i < 300; ++i) {
      x = x * 1103515245u + 12345u;
      const double u = ((x >> 8) & 0xffff) / 65536.0 + 1e-6;
      data << 0.0066 * i << ',' << -std::log(u) << ',' << i % 2 << '\n';
    }
  }
  seqc_config* cfg = nullptr;
  REQUIRE(seqc_config_parse(kSmallConfig, &cfg) == SEQC_OK);
  const std::string data = (dir / "data.csv").string(), state = (dir / "state.json").string();
  Text first, second, all;
  REQUIRE(seqc_analyze(data.c_str(), cfg, "wilcoxon-adjusted", 2, state.c_str(), &first.p) == SEQC_OK);
  REQUIRE(seqc_analyze(data.c_str(), cfg, "wilcoxon-adjusted", 3, state.c_str(), &second.p) == SEQC_OK);
  REQUIRE(seqc_analyze(data.c_str(), cfg, "wilcoxon-adjusted", 3, nullptr, &all.p) == SEQC_OK);
  CHECK(second.str() == all.str());
  const auto a = nlohmann::json::parse(first.str()), b = nlohmann::json::parse(second.str());
  REQUIRE(a["looks"].size() == 2);
  CHECK(b["looks"][0] == a["looks"][0]);
  CHECK(b["looks"][1] == a["looks"][1]);
  Text wrong;
  CHECK(seqc_analyze(data.c_str(), cfg, "logrank", 3, state.c_str(), &wrong.p) == SEQC_STATE_MISMATCH);
  CHECK(seqc_analyze(data.c_str(), cfg, "wilcoxon-V", 1, nullptr, &wrong.p) == SEQC_CONFIG_INVALID);
  seqc_config_free(cfg);
}

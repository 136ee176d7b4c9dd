#include <doctest.h>

#include <sstream>
#include <string>

#include "error.hpp"
#include "report.hpp"

using namespace seqcombine;
using nlohmann::json;

namespace {

mcsim::SimReport small_report(mcsim::RunMode mode) {
  mcsim::Design d;
  d.qmc_points = 1024;
  const auto scenario = mcsim::scenario_for(d, survdata::Family::Proportional, 0.23);
  const std::vector<mcsim::TestSpec> tests{{mcsim::TestFamily::Logrank, {}}, {mcsim::TestFamily::WilcoxonIV, 0.6}};
  mcsim::StudyOptions opt;
  opt.reps = 12;
  opt.seed = 3;
  opt.mode = mode;
  return mcsim::run_study("ph", scenario, d, tests, opt);
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

}  // namespace

TEST_SUITE("report") {
  TEST_CASE("simulation report round trip") {
    for (auto mode : {mcsim::RunMode::Monitor, mcsim::RunMode::CompletePaths}) {
      const auto r = small_report(mode);
      CHECK(report::sim_report_from_json(report::to_json(r)) == r);
      CHECK(report::sim_report_from_json(json::parse(report::to_json(r).dump())) == r);
    }
  }

  TEST_CASE("study document round trip and version check") {
    report::StudyDocument doc;
    doc.config = config::load(SEQCOMBINE_SOURCE_DIR "/configs/paper_table2.json");
    doc.studies.push_back(small_report(mcsim::RunMode::Monitor));
    auto j = report::to_json(doc);
    CHECK(report::study_from_json(j) == doc);
    j["version"] = 99;
    CHECK_THROWS_AS(report::study_from_json(j), Error);
    CHECK_THROWS_AS(report::study_from_json(json{{"format", "other"}}), Error);
  }

  TEST_CASE("results CSV has one row per scenario and test") {
    const auto r = small_report(mcsim::RunMode::Monitor);
    const auto rows = lines(report::results_csv({r, r}));
    REQUIRE(rows.size() == 5);
    CHECK(rows[0] == "scenario,test,t_delay,method,reps,rejections,flagged,rate,mc_se,avg_analyses");
    CHECK(rows[1].rfind("ph,logrank,,indinc,12,", 0) == 0);
    CHECK(rows[2].rfind("ph,wilcoxon-IV,0.6000,indinc,12,", 0) == 0);
  }

  TEST_CASE("standardized covariance CSV lists complete-path entries") {
    const auto r = small_report(mcsim::RunMode::CompletePaths);
    const auto rows = lines(report::standardized_cov_csv({r}));
    // Header plus 25 entries for each of the two tests.
    CHECK(rows.size() == 1 + 2 * 25);
    CHECK(lines(report::standardized_cov_csv({small_report(mcsim::RunMode::Monitor)})).size() == 1);
  }

  TEST_CASE("number formatting") {
    CHECK(report::format_number(0.05) == "0.050000");
    CHECK(report::format_number(1.0 / 3.0, 4) == "0.3333");
    CHECK(report::format_number(-2.5) == "-2.500000");
  }

  TEST_CASE("matrix CSV parsing") {
    const auto m = report::parse_matrix_csv("# brownian\n1,1\n1, 2\n");
    CHECK(m.dim() == 2);
    CHECK(m(1, 1) == 2.0);
    CHECK(report::matrix_from_json(report::matrix_to_json(m)) == m);
    CHECK_THROWS_AS(report::parse_matrix_csv("1,2\n3\n"), Error);
    CHECK_THROWS_AS(report::parse_matrix_csv("1,x\n1,2\n"), Error);
    CHECK_THROWS_AS(report::parse_matrix_csv(""), Error);
  }

  TEST_CASE("boundary command picks the method and reports the schedule") {
    const auto cov = report::parse_matrix_csv("1,1,1\n1,2,2\n1,2,3\n");
    const json plan{{"alpha", 0.05}, {"cumulative", {0.2, 0.5, 1.0}}};
    const auto out = report::boundaries_command(cov, plan, std::nullopt);
    CHECK(out.at("method") == "indinc");
    CHECK(out.at("critical_values").size() == 3);
    CHECK(out.at("achieved_total").get<double>() == doctest::Approx(0.05).epsilon(1e-4));
    const auto schedule = report::schedule_from_json(out);
    CHECK(report::schedule_from_json(report::to_json(schedule)) == schedule);

    json mvn_plan = plan;
    mvn_plan["method"] = "mvn";
    const auto m = report::boundaries_command(cov, mvn_plan, 7);
    CHECK(m.at("method") == "mvn");
    CHECK(m.at("seed") == 7);
    for (std::size_t j = 0; j < 3; ++j)
      CHECK(std::fabs(m["critical_values"][j].get<double>() - out["critical_values"][j].get<double>()) < 2e-3);
  }

  TEST_CASE("boundary command errors") {
    const json plan{{"alpha", 0.05}, {"cumulative", {0.5, 1.0}}};
    const auto indefinite = report::parse_matrix_csv("1,2\n2,1\n");
    try {
      report::boundaries_command(indefinite, plan, std::nullopt);
      FAIL("expected NotPositiveDefinite");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::NotPositiveDefinite);
    }
    const auto three = report::parse_matrix_csv("1,0,0\n0,1,0\n0,0,1\n");
    CHECK_THROWS_AS(report::boundaries_command(three, plan, std::nullopt), Error);
    json bad = plan;
    bad["method"] = "simplex";
    CHECK_THROWS_AS(report::boundaries_command(report::parse_matrix_csv("1,1\n1,2\n"), bad, std::nullopt), Error);
  }
}

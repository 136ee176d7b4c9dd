#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "error.hpp"
#include "mcsim.hpp"

using namespace seqcombine;
using mcsim::TestFamily;
using mcsim::TestSpec;

namespace {

mcsim::Design fast_design() {
  mcsim::Design d;
  d.qmc_points = 1024;
  return d;
}

}  // namespace

TEST_SUITE("mcsim") {
  TEST_CASE("roster names round-trip") {
    const auto tests = mcsim::standard_tests(0.6);
    REQUIRE(tests.size() == 11);
    for (const auto& t : tests) {
      CHECK(mcsim::parse_test_family(t.name()) == t.family);
      CHECK_NOTHROW(t.validate());
    }
    CHECK(mcsim::TestSpec{TestFamily::WilcoxonAdjusted, {}}.method() == boundaries::Method::Mvn);
    CHECK(mcsim::TestSpec{TestFamily::Rmst, {}}.method() == boundaries::Method::Mvn);
    CHECK(mcsim::TestSpec{TestFamily::RmstII, {}}.method() == boundaries::Method::Indinc);
    CHECK_THROWS_AS(mcsim::parse_test_family("wilcoxon-V"), Error);
  }

  TEST_CASE("delayed variants require t_delay") {
    CHECK_THROWS_AS((TestSpec{TestFamily::WilcoxonIV, std::nullopt}.validate()), Error);
    CHECK_THROWS_AS((TestSpec{TestFamily::RmstIII, -0.1}.validate()), Error);
    CHECK_NOTHROW((TestSpec{TestFamily::RmstIII, 0.0}.validate()));
  }

  TEST_CASE("design validation names the field") {
    auto d = fast_design();
    d.analysis_times = {1.0, 0.5, 2.0, 2.5, 3.0};
    try {
      d.validate();
      FAIL("expected InvalidSpec");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::InvalidSpec);
      CHECK(std::string(e.what()).find("analysis_times") != std::string::npos);
    }
    d = fast_design();
    d.plan.cumulative = {0.5, 1.0};
    CHECK_THROWS_AS(d.validate(), Error);
    d = fast_design();
    d.restrictions = {0.5, 1.0, 1.5, 2.0, 3.5};
    CHECK_THROWS_AS(d.validate(), Error);
  }

  TEST_CASE("overwhelming effect rejects at the first look") {
    const auto d = fast_design();
    const auto scenario = mcsim::scenario_for(d, survdata::Family::Proportional, 5.0);
    const auto tests = mcsim::standard_tests(0.6);
    for (std::uint64_t trial = 0; trial < 3; ++trial) {
      const auto outcomes = mcsim::run_trial(scenario, d, tests, 1, trial);
      for (const auto& o : outcomes) {
        CHECK_FALSE(o.flagged);
        CHECK(o.rejected);
        // Wilcoxon IV and RMST III need events past the delay; everything else stops at once.
        CHECK(o.stop_look <= 2);
      }
      CHECK(outcomes[6].stop_look == 1);  // logrank
    }
  }

  TEST_CASE("nobody enrolled at the first look") {
    const auto d = fast_design();
    std::vector<survdata::Subject> subjects;
    std::mt19937_64 rng(3);
    std::exponential_distribution<double> ex(1.0);
    for (int i = 0; i < 400; ++i) subjects.push_back({1.05 + 0.002 * i, ex(rng), i % 2});
    const auto outcomes = mcsim::run_trial(subjects, d, mcsim::standard_tests(0.6), 5, 0);
    for (const auto& o : outcomes) {
      CHECK_FALSE(o.flagged);
      REQUIRE_FALSE(o.looks.empty());
      CHECK(o.looks[0].skipped);
      CHECK(o.stop_look != 1);
    }
  }

  TEST_CASE("replaying a trial is bit-identical") {
    const auto d = fast_design();
    const auto scenario = mcsim::scenario_for(d, survdata::Family::Null, 0.0);
    const auto tests = mcsim::standard_tests(0.6);
    const auto a = mcsim::run_trial(scenario, d, tests, 42, 7);
    const auto b = mcsim::run_trial(scenario, d, tests, 42, 7);
    REQUIRE(a.size() == 11);
    for (std::size_t i = 0; i < a.size(); ++i) {
      REQUIRE(a[i].looks.size() == b[i].looks.size());
      for (std::size_t j = 0; j < a[i].looks.size(); ++j) {
        CHECK(a[i].looks[j].z == b[i].looks[j].z);
        CHECK(a[i].looks[j].boundary == b[i].looks[j].boundary);
      }
    }
  }

  TEST_CASE("adding a test does not perturb the others") {
    const auto d = fast_design();
    const auto scenario = mcsim::scenario_for(d, survdata::Family::Proportional, 0.23);
    const std::vector<TestSpec> one{{TestFamily::WilcoxonIII, {}}};
    const auto all = mcsim::standard_tests(0.6);
    const auto a = mcsim::run_trial(scenario, d, one, 9, 3);
    const auto b = mcsim::run_trial(scenario, d, all, 9, 3);
    REQUIRE(a[0].looks.size() <= b[4].looks.size());
    for (std::size_t j = 0; j < a[0].looks.size(); ++j) CHECK(a[0].looks[j].z == b[4].looks[j].z);
    CHECK(a[0].stop_look == b[4].stop_look);
  }

  TEST_CASE("study report does not depend on the worker count") {
    const auto d = fast_design();
    const auto scenario = mcsim::scenario_for(d, survdata::Family::LogOdds, 0.32);
    const std::vector<TestSpec> tests{{TestFamily::WilcoxonAdjusted, {}}, {TestFamily::RmstI, {}}};
    mcsim::StudyOptions opt;
    opt.reps = 24;
    opt.seed = 17;
    opt.threads = 1;
    const auto one = mcsim::run_study("lo", scenario, d, tests, opt);
    opt.threads = 3;
    const auto three = mcsim::run_study("lo", scenario, d, tests, opt);
    CHECK(one == three);
    CHECK(one.tests[0].reps == 24);
    const auto& s = one.tests[1];
    CHECK(s.rate == doctest::Approx(double(s.rejections) / 24.0));
    CHECK(s.mc_se == doctest::Approx(std::sqrt(s.rate * (1 - s.rate) / 24.0)));
  }

  TEST_CASE("complete paths produce a standardized covariance") {
    const auto d = fast_design();
    const auto scenario = mcsim::scenario_for(d, survdata::Family::Null, 0.0);
    const std::vector<TestSpec> tests{{TestFamily::Logrank, {}}};
    mcsim::StudyOptions opt;
    opt.reps = 400;
    opt.mode = mcsim::RunMode::CompletePaths;
    const auto r = mcsim::run_study("null", scenario, d, tests, opt);
    REQUIRE(r.tests[0].standardized_cov);
    const auto& m = *r.tests[0].standardized_cov;
    CHECK(m(4, 4) == doctest::Approx(1.0));
    CHECK(r.tests[0].rejections == 0);
    // Logrank scores have independent increments: cov(j, k) = var(j).
    for (std::size_t j = 0; j < 4; ++j) CHECK(std::fabs(m(j, 4) - m(j, j)) < 0.1);
  }

  TEST_CASE("standardized covariance of Brownian paths") {
    std::mt19937_64 rng(2);
    std::normal_distribution<double> z;
    std::vector<std::vector<double>> paths;
    for (int r = 0; r < 10000; ++r) {
      std::vector<double> p(5);
      double s = 0.0;
      for (auto& x : p) x = (s += z(rng));
      paths.push_back(p);
    }
    const auto m = mcsim::standardized_cov_report(paths);
    for (std::size_t j = 0; j < 5; ++j)
      for (std::size_t k = 0; k < 5; ++k) CHECK(std::fabs(m(j, k) - double(std::min(j, k) + 1) / 5.0) < 0.02);
  }

  TEST_CASE("standardized covariance needs variation") {
    const std::vector<std::vector<double>> same(10, std::vector<double>{1.0, 2.0});
    try {
      mcsim::standardized_cov_report(same);
      FAIL("expected InsufficientData");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::InsufficientData);
    }
    CHECK_THROWS_AS(mcsim::standardized_cov_report({{1.0}}), Error);
  }

  TEST_CASE("direction vectors") {
    const auto d = fast_design();
    const auto scenario = mcsim::scenario_for(d, survdata::Family::Null, 0.0);
    Stream stream(4, 0, StreamPurpose::TrialData);
    const auto subjects = survdata::sample_scenario(scenario, stream);
    const auto tests = mcsim::standard_tests(0.6);
    mcsim::SharedLooks shared(d, tests);
    for (std::size_t j = 0; j < 3; ++j) shared.add_look(survdata::interim_view(subjects, d.analysis_times[j]), true, true, true);
    CHECK(mcsim::direction(TestSpec{TestFamily::Logrank, {}}, shared).empty());
    CHECK(mcsim::direction(TestSpec{TestFamily::WilcoxonUnadjusted, {}}, shared).empty());
    CHECK(mcsim::direction(TestSpec{TestFamily::WilcoxonI, {}}, shared) == shared.wilcoxon().variances());
    CHECK(mcsim::direction(TestSpec{TestFamily::WilcoxonII, {}}, shared) == shared.wilcoxon().mean_logodds());
    CHECK(mcsim::direction(TestSpec{TestFamily::RmstI, {}}, shared) == shared.rmst().mean_logodds());
    const auto snap = mcsim::source_snapshot(TestSpec{TestFamily::Logrank, {}}, shared);
    REQUIRE(snap.statistics.size() == 3);
    CHECK(snap.cov(0, 2) == snap.cov(0, 0));
  }
}

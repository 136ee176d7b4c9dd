#include <doctest.h>

#include <cmath>
#include <vector>

#include "error.hpp"
#include "oracles.hpp"
#include "rng.hpp"
#include "wilcoxon.hpp"

using namespace seqcombine;
using survdata::InterimView;
using survdata::Record;

namespace {

struct Obs {
  double u;
  bool event;
  int arm;
};

InterimView make_view(const std::vector<Obs>& obs, double t = 10.0) {
  std::vector<Record> recs;
  for (const auto& o : obs) recs.push_back(Record{o.u, o.event, o.arm, 0.0});
  return InterimView(t, recs);
}

// Pairwise form: sum over events i, over j with U_j >= U_i, of (Z_i - Z_j).
double gehan_pairs(const std::vector<Obs>& obs) {
  double s = 0.0;
  for (const auto& i : obs)
    if (i.event)
      for (const auto& j : obs)
        if (j.u >= i.u) s += i.arm - j.arm;
  return s;
}

// Observed minus expected arm-1 events, with hypergeometric variance.
std::pair<double, double> logrank_oe(const std::vector<Obs>& obs) {
  double oe = 0.0, var = 0.0;
  for (const auto& i : obs) {
    if (!i.event) continue;
    double at_risk = 0.0, treated = 0.0;
    for (const auto& j : obs)
      if (j.u >= i.u) {
        at_risk += 1.0;
        treated += j.arm;
      }
    oe += i.arm - treated / at_risk;
    var += (treated / at_risk) * (1.0 - treated / at_risk);
  }
  return {oe, var};
}

const std::vector<Obs> kHand{{1.0, true, 1}, {2.0, true, 0}, {3.0, true, 1}, {4.0, true, 0}};

std::vector<survdata::Subject> null_sample(std::size_t n, std::uint64_t seed) {
  survdata::ScenarioSpec spec;
  spec.n = n;
  Stream s(seed, 0, StreamPurpose::TrialData);
  return survdata::sample_scenario(spec, s);
}

double w_true(double u, double t) { return std::exp(-u) * std::clamp((t - u) / 2.0, 0.0, 1.0); }

}  // namespace

TEST_SUITE("wilcoxon") {
  TEST_CASE("gehan statistic on the hand dataset") {
    const auto v = make_view(kHand);
    const double n = 4.0;
    CHECK(wilcoxon::gehan_statistic(v, 4) == doctest::Approx(gehan_pairs(kHand) / std::pow(n, 1.5)).epsilon(1e-14));
    // Events at 1, 2, 3, 4 contribute 2, -1, 1, 0.
    CHECK(gehan_pairs(kHand) == 2.0);
  }

  TEST_CASE("gehan statistic with censoring matches the pairwise form") {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> unif(0.0, 3.0);
    for (int rep = 0; rep < 200; ++rep) {
      std::vector<Obs> obs;
      for (int i = 0; i < 12; ++i) obs.push_back({unif(rng), unif(rng) < 2.0, int(rng() % 2)});
      const auto v = make_view(obs);
      CHECK(wilcoxon::gehan_statistic(v, 12) == doctest::Approx(gehan_pairs(obs) / std::pow(12.0, 1.5)).epsilon(1e-12));
      const auto [oe, var] = logrank_oe(obs);
      CHECK(wilcoxon::logrank_statistic(v, 12) == doctest::Approx(oe / std::sqrt(12.0)).epsilon(1e-12));
      CHECK(wilcoxon::logrank_variance(v, 12) == doctest::Approx(var / 12.0).epsilon(1e-12));
    }
  }

  TEST_CASE("gehan and logrank are zero without events or contrast") {
    const auto censored = make_view({{1.0, false, 0}, {2.0, false, 1}});
    CHECK(wilcoxon::gehan_statistic(censored, 2) == 0.0);
    CHECK(wilcoxon::logrank_statistic(censored, 2) == 0.0);
    const auto one_arm = make_view({{1.0, true, 1}, {2.0, true, 1}});
    CHECK(wilcoxon::gehan_statistic(one_arm, 2) == 0.0);
    CHECK(wilcoxon::logrank_statistic(one_arm, 2) == 0.0);
    CHECK(wilcoxon::if_variance(one_arm, 2) == 0.0);
    CHECK(wilcoxon::mean_logodds(one_arm, 2) == 0.0);
    CHECK(wilcoxon::if_variance(censored, 2) == 0.0);
  }

  TEST_CASE("logrank on the hand dataset") {
    const auto v = make_view(kHand);
    const auto [oe, var] = logrank_oe(kHand);
    CHECK(oe == doctest::Approx(1.0 - 0.5 + 0.0 - 1.0 / 3.0 + 1.0 - 0.5 + 0.0));
    CHECK(wilcoxon::logrank_statistic(v, 4) == doctest::Approx(oe / 2.0));
    CHECK(wilcoxon::logrank_variance(v, 4) == doctest::Approx(var / 4.0));
  }

  TEST_CASE("swapping arms negates the statistics") {
    std::vector<Obs> flipped = kHand;
    for (auto& o : flipped) o.arm = 1 - o.arm;
    const auto a = make_view(kHand), b = make_view(flipped);
    CHECK(wilcoxon::gehan_statistic(b, 4) == doctest::Approx(-wilcoxon::gehan_statistic(a, 4)));
    CHECK(wilcoxon::logrank_statistic(b, 4) == doctest::Approx(-wilcoxon::logrank_statistic(a, 4)));
    CHECK(wilcoxon::if_variance(b, 4) == doctest::Approx(wilcoxon::if_variance(a, 4)));
  }

  TEST_CASE("influence-function variance on the hand dataset") {
    // pi = 1/2; at-risk counts at the events are 4, 3, 2, 1.
    const double expected = 0.25 * (16.0 + 9.0 + 4.0 + 1.0) / 64.0;
    CHECK(wilcoxon::if_variance(make_view(kHand), 4) == doctest::Approx(expected));
  }

  TEST_CASE("covariance at s = t reduces to the variance") {
    const auto subjects = null_sample(400, 1);
    const auto v = survdata::interim_view(subjects, 2.0);
    CHECK(wilcoxon::if_covariance(v, v, 400) == doctest::Approx(wilcoxon::if_variance(v, 400)).epsilon(1e-14));
    const auto early = survdata::interim_view(subjects, 0.01);
    CHECK(wilcoxon::if_covariance(early, v, 400) == 0.0);
    CHECK_THROWS_AS(wilcoxon::if_covariance(v, early, 400), Error);
  }

  TEST_CASE("delayed direction: empty range and t_delay = 0") {
    const auto v = make_view(kHand, 5.0);
    CHECK(wilcoxon::mean_delayed(v, 4, 5.0) == 0.0);
    CHECK(wilcoxon::mean_delayed(v, 4, 4.5) == 0.0);
    // At-risk counts 4, 3, 2, 1 over n^2 = 16, times pi(1 - pi).
    CHECK(wilcoxon::mean_delayed(v, 4, 0.0) == doctest::Approx(0.25 * 10.0 / 16.0));
    CHECK(wilcoxon::mean_delayed(v, 4, 2.5) == doctest::Approx(0.25 * 3.0 / 16.0));
  }

  TEST_CASE("log-odds direction uses the left-limit survival") {
    // S(u-) at the events: 1, 3/4, 1/2, 1/4.
    const double expected = 0.25 * (4 * 1.0 + 3 * 0.75 + 2 * 0.5 + 1 * 0.25) / 16.0;
    CHECK(wilcoxon::mean_logodds(make_view(kHand), 4) == doctest::Approx(expected));
  }

  TEST_CASE("large null sample tracks the asymptotic integrals") {
    const std::size_t n = 40000;
    const auto subjects = null_sample(n, 8);
    const auto v3 = survdata::interim_view(subjects, 3.0);
    const auto v1 = survdata::interim_view(subjects, 1.0);
    const auto v2 = survdata::interim_view(subjects, 2.0);
    const double pq = 0.25;
    const double var3 = pq * oracle::simpson([](double u) { return std::pow(w_true(u, 3.0), 3); }, 0.0, 3.0);
    const double cov13 =
        pq * oracle::simpson([](double u) { return w_true(u, 1.0) * w_true(u, 1.0) * w_true(u, 3.0); }, 0.0, 1.0);
    const double logodds2 =
        pq * oracle::simpson([](double u) { return w_true(u, 2.0) * w_true(u, 2.0) * std::exp(-u); }, 0.0, 2.0);
    const double delayed2 = pq * oracle::simpson([](double u) { return w_true(u, 2.0) * w_true(u, 2.0); }, 0.0, 2.0);
    CHECK(wilcoxon::if_variance(v3, n) == doctest::Approx(var3).epsilon(0.03));
    CHECK(wilcoxon::if_covariance(v1, v3, n) == doctest::Approx(cov13).epsilon(0.03));
    CHECK(wilcoxon::mean_logodds(v2, n) == doctest::Approx(logodds2).epsilon(0.03));
    CHECK(wilcoxon::mean_delayed(v2, n, 0.0) == doctest::Approx(delayed2).epsilon(0.03));
  }

  TEST_CASE("ad hoc direction") {
    const std::vector<double> v{0.058, 0.240, 0.651, 0.933, 1.0};
    CHECK(wilcoxon::adhoc_direction(v) == v);
    CHECK_THROWS_AS(wilcoxon::adhoc_direction(std::vector<double>{1.0, -0.1}), Error);
  }

  TEST_CASE("path accumulates frozen covariance entries") {
    const auto subjects = null_sample(300, 3);
    const std::vector<double> times{1.0, 1.5, 2.0};
    wilcoxon::WilcoxonPath path(3, 300, {0.6});
    std::vector<InterimView> views;
    for (double t : times) {
      views.push_back(survdata::interim_view(subjects, t));
      path.add_look(views);
    }
    REQUIRE(path.looks() == 3);
    for (std::size_t j = 0; j < 3; ++j) {
      CHECK(path.statistics()[j] == doctest::Approx(wilcoxon::gehan_statistic(views[j], 300)).epsilon(1e-14));
      CHECK(path.cov()(j, j) == doctest::Approx(wilcoxon::if_variance(views[j], 300)).epsilon(1e-14));
      for (std::size_t l = 0; l < j; ++l)
        CHECK(path.cov()(l, j) == doctest::Approx(wilcoxon::if_covariance(views[l], views[j], 300)).epsilon(1e-14));
      CHECK(path.mean_delayed(0)[j] == doctest::Approx(wilcoxon::mean_delayed(views[j], 300, 0.6)).epsilon(1e-14));
      CHECK(path.mean_logodds()[j] == doctest::Approx(wilcoxon::mean_logodds(views[j], 300)).epsilon(1e-14));
    }
    // Out-of-order input is rejected.
    CHECK_THROWS_AS(path.add_look(std::span<const InterimView>(views.data(), 2)), Error);
  }
}

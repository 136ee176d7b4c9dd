#include <doctest.h>

#include <cmath>
#include <vector>

#include "asymptotic.hpp"
#include "error.hpp"
#include "oracles.hpp"
#include "rng.hpp"
#include "wilcoxon.hpp"

using namespace seqcombine;

TEST_SUITE("asymptotic") {
  TEST_CASE("fully enrolled gehan covariance has a closed form") {
    for (double s : {0.5, 1.0, 2.0})
      CHECK(asymptotic::gehan_null_cov(s, s + 1.0, 0.5, 1e-9) ==
            doctest::Approx(0.25 * (1 - std::exp(-3 * s)) / 3).epsilon(1e-9));
  }

  TEST_CASE("fully enrolled rmst covariance has a closed form") {
    const double lj = 0.8, lk = 1.7, a = std::exp(-lj), b = std::exp(-lk);
    const double expected = 4.0 * ((1 - std::exp(-lj)) - (a + b) * lj + a * b * (std::exp(lj) - 1));
    CHECK(asymptotic::rmst_null_cov(lj, lk, 2.0, 0.5, 1e-9) == doctest::Approx(expected).epsilon(1e-9));
  }

  TEST_CASE("staggered entry matches plain quadrature") {
    auto w = [](double u, double t) { return std::exp(-u) * std::clamp((t - u) / 2.0, 0.0, 1.0); };
    const double s = 1.5, t = 3.0;
    const double ref = 0.3 * 0.7 * oracle::simpson([&](double u) { return w(u, s) * w(u, s) * w(u, t); }, 0.0, s);
    CHECK(asymptotic::gehan_null_cov(s, t, 0.3, 2.0) == doctest::Approx(ref).epsilon(1e-8));
    CHECK(asymptotic::gehan_null_cov(t, s, 0.3, 2.0) == doctest::Approx(ref).epsilon(1e-8));

    const double lj = 1.3, lk = 2.8;
    auto big_a = [](double u, double l) { return std::exp(-u) - std::exp(-l); };
    const double rref = 4.0 * oracle::simpson([&](double u) { return big_a(u, lj) * big_a(u, lk) / w(u, t); }, 0.0, lj);
    CHECK(asymptotic::rmst_null_cov(lj, lk, t, 0.5, 2.0) == doctest::Approx(rref).epsilon(1e-7));
  }

  TEST_CASE("matrices are symmetric with the right diagonal") {
    const std::vector<double> times{1.0, 1.5, 2.0, 2.5, 3.0};
    const auto g = asymptotic::gehan_null_matrix(times, 0.5, 2.0);
    for (std::size_t j = 0; j < 5; ++j) {
      CHECK(g(j, j) == doctest::Approx(asymptotic::gehan_null_cov(times[j], times[j], 0.5, 2.0)));
      if (j) CHECK(g(j, j) > g(j - 1, j - 1));
    }
    const std::vector<double> restrictions{0.8, 1.3, 1.8, 2.3, 2.8};
    const auto r = asymptotic::rmst_null_matrix(times, restrictions, 0.5, 2.0);
    CHECK(r(1, 3) == doctest::Approx(asymptotic::rmst_null_cov(1.3, 2.3, 2.5, 0.5, 2.0)));
    CHECK_THROWS_AS(asymptotic::rmst_null_matrix(times, std::vector<double>{1.0}, 0.5, 2.0), Error);
    CHECK_THROWS_AS(asymptotic::rmst_null_cov(1.0, 3.5, 3.0, 0.5, 2.0), Error);
    CHECK_THROWS_AS(asymptotic::gehan_null_cov(1.0, 2.0, 1.0, 2.0), Error);
  }

  TEST_CASE("estimated gehan covariance converges to the asymptotic one") {
    survdata::ScenarioSpec spec;
    spec.n = 40000;
    Stream stream(12, 0, StreamPurpose::TrialData);
    const auto subjects = survdata::sample_scenario(spec, stream);
    const auto v1 = survdata::interim_view(subjects, 1.0), v3 = survdata::interim_view(subjects, 3.0);
    CHECK(wilcoxon::if_covariance(v1, v3, spec.n) ==
          doctest::Approx(asymptotic::gehan_null_cov(1.0, 3.0, 0.5, 2.0)).epsilon(0.03));
  }
}

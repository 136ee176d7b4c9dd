#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "boundaries.hpp"
#include "error.hpp"
#include "oracles.hpp"

using namespace seqcombine;
using boundaries::SpendingPlan;
using matrix::SymMatrix;

namespace {

SpendingPlan single_look() { return SpendingPlan{{1.0}, 0.05}; }

SymMatrix brownian_corr(const std::vector<double>& v) {
  SymMatrix m(v.size());
  for (std::size_t r = 0; r < v.size(); ++r)
    for (std::size_t c = 0; c <= r; ++c) m.set(r, c, std::sqrt(v[c] / v[r]));
  return m;
}

// P(|X| < a, |Y| < b) for a standard bivariate normal with correlation rho,
// integrating the conditional probability of Y over X.
double bivariate_box(double a, double b, double rho) {
  const double s = std::sqrt(1 - rho * rho);
  return oracle::simpson(
      [&](double x) {
        return oracle::norm_pdf(x) * (oracle::norm_cdf((b - rho * x) / s) - oracle::norm_cdf((-b - rho * x) / s));
      },
      -a, a);
}

}  // namespace

TEST_SUITE("boundaries") {
  TEST_CASE("single look gives the normal quantile") {
    const std::vector<double> v{1.0};
    const auto s = boundaries::indinc_boundaries(v, single_look());
    CHECK(s.steps[0].c == doctest::Approx(1.959964).epsilon(1e-4 / 1.96));
    const auto m = boundaries::mvn_boundaries(SymMatrix::identity(1), single_look());
    CHECK(m.steps[0].c == doctest::Approx(1.959964).epsilon(1e-4 / 1.96));
    CHECK(s.steps[0].crossing == doctest::Approx(0.05).epsilon(1e-6));
  }

  TEST_CASE("single-look quantile does not depend on the variance scale") {
    for (double v : {1e-3, 0.25, 40.0}) {
      const std::vector<double> vs{v};
      CHECK(boundaries::indinc_boundaries(vs, single_look()).steps[0].c == doctest::Approx(1.959964).epsilon(5e-5));
    }
  }

  TEST_CASE("independent increments: grid recursion and lattice agree") {
    const std::vector<double> v{1, 2, 3, 4, 5};
    const auto plan = SpendingPlan::standard();
    const auto a = boundaries::indinc_boundaries(v, plan);
    const auto b = boundaries::mvn_boundaries(brownian_corr(v), plan, 0, 11);
    REQUIRE(a.steps.size() == 5);
    for (std::size_t j = 0; j < 5; ++j) CHECK(std::fabs(a.steps[j].c - b.steps[j].c) < 2e-3);
    const auto cum = a.cumulative();
    for (std::size_t j = 0; j < 5; ++j) CHECK(cum[j] == doctest::Approx(plan.cumulative_alpha(j + 1)).epsilon(1e-5));
    // The first look is the plain two-sided quantile of its spend.
    CHECK(a.steps[0].c == doctest::Approx(3.0233414).epsilon(1e-5));
  }

  TEST_CASE("two-look crossing matches a quadrature oracle") {
    const std::vector<double> v{1.0, 2.5};
    const auto plan = SpendingPlan{{0.3, 1.0}, 0.05};
    const auto s = boundaries::indinc_boundaries(v, plan);
    const double rho = std::sqrt(1.0 / 2.5);
    const double stay = bivariate_box(s.steps[0].c, s.steps[1].c, rho);
    CHECK(1.0 - stay == doctest::Approx(0.05).epsilon(1e-4));
  }

  TEST_CASE("rectangle probabilities") {
    const std::vector<double> lo{-1.959964, -1.959964, -1.959964}, hi{1.959964, 1.959964, 1.959964};
    const auto r = boundaries::mvn_rectangle(lo, hi, SymMatrix::identity(3));
    CHECK(std::fabs(r.probability - std::pow(0.95, 3)) < 5e-5);

    SymMatrix ones(3);
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j <= i; ++j) ones.set(i, j, i == j ? 1.0 : 1.0 - 1e-9);
    const auto p = boundaries::mvn_rectangle(lo, hi, ones);
    CHECK(std::fabs(p.probability - 0.95) < 5e-5);

    const double rho = 0.6;
    const auto biv = SymMatrix::from_rows(std::vector<double>{1, rho, rho, 1}, 2);
    const std::vector<double> lo2{-1.2, -2.0}, hi2{1.2, 2.0};
    CHECK(std::fabs(boundaries::mvn_rectangle(lo2, hi2, biv).probability - bivariate_box(1.2, 2.0, rho)) < 5e-5);

    const double inf = std::numeric_limits<double>::infinity();
    const std::vector<double> lo3{-inf, -inf}, hi3{inf, 0.0};
    CHECK(boundaries::mvn_rectangle(lo3, hi3, biv).probability == doctest::Approx(0.5).epsilon(1e-6));
  }

  TEST_CASE("rectangle error estimate is honest") {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(0.5, 2.5);
    for (int rep = 0; rep < 5; ++rep) {
      const auto cov = oracle::random_spd(rng, 4);
      const auto corr = boundaries::correlation(cov);
      std::vector<double> lo(4), hi(4);
      for (std::size_t i = 0; i < 4; ++i) {
        hi[i] = u(rng);
        lo[i] = -u(rng);
      }
      const auto coarse = boundaries::mvn_rectangle(lo, hi, corr, 1, 8, 1024, 1.0);
      const auto fine = boundaries::mvn_rectangle(lo, hi, corr, 2, 8, 1u << 16, 0.0);
      CHECK(std::fabs(coarse.probability - fine.probability) <= coarse.error + fine.error + 1e-6);
    }
  }

  TEST_CASE("zero spend at a look caps the boundary and carries forward") {
    const std::vector<double> v{1, 2, 3};
    const auto plan = SpendingPlan{{0.0, 0.5, 1.0}, 0.05};
    const auto s = boundaries::indinc_boundaries(v, plan);
    CHECK(s.steps[0].c == boundaries::kMaxCritical);
    CHECK(s.steps[0].crossing < 1e-8);
    CHECK(s.cumulative()[2] == doctest::Approx(0.05).epsilon(1e-5));
  }

  TEST_CASE("skipped spend carries to the next look") {
    boundaries::IndincBoundarySolver solver;
    // Look 1 never reaches the solver; look 2 asks for the cumulative target.
    const auto step = solver.add_look(1.0, 0.01);
    CHECK(step.crossing == doctest::Approx(0.01).epsilon(1e-6));
    CHECK(step.c == doctest::Approx(2.5758293).epsilon(1e-5));
  }

  TEST_CASE("non-increasing information is rejected") {
    boundaries::IndincBoundarySolver solver;
    solver.add_look(2.0, 0.01);
    try {
      solver.add_look(1.0, 0.02);
      FAIL("expected NonMonotoneInformation");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::NonMonotoneInformation);
    }
  }

  TEST_CASE("lattice solver rejects an invalid correlation row") {
    boundaries::MvnBoundarySolver solver(3);
    const std::vector<double> first{1.0};
    solver.add_look(first, 0.01);
    const std::vector<double> bad{1.5, 1.0};
    CHECK_THROWS_AS(solver.add_look(bad, 0.02), Error);
  }

  TEST_CASE("same seed reproduces the lattice schedule") {
    const std::vector<double> v{1, 1.7, 2.2, 3.9};
    const auto plan = SpendingPlan{{0.1, 0.3, 0.6, 1.0}, 0.05};
    const auto a = boundaries::mvn_boundaries(brownian_corr(v), plan, 0, 5);
    const auto b = boundaries::mvn_boundaries(brownian_corr(v), plan, 0, 5);
    CHECK(a == b);
  }

  TEST_CASE("spending plans") {
    const auto plan = SpendingPlan::standard();
    CHECK(plan.looks() == 5);
    CHECK(plan.cumulative_alpha(1) == doctest::Approx(0.0025));
    CHECK(plan.cumulative_alpha(5) == doctest::Approx(0.05));
    CHECK_THROWS_AS((SpendingPlan{{0.5, 0.4, 1.0}, 0.05}.validate()), Error);
    CHECK_THROWS_AS((SpendingPlan{{0.5, 0.9}, 0.05}.validate()), Error);
    CHECK_THROWS_AS((SpendingPlan{{1.0}, 1.5}.validate()), Error);
    CHECK_THROWS_AS(boundaries::parse_method("bisection"), Error);
  }

  TEST_CASE("correlation and the increments pattern") {
    const auto cov = SymMatrix::from_rows(std::vector<double>{1, 1, 1, 1, 2, 2, 1, 2, 3}, 3);
    CHECK(boundaries::has_independent_increments(cov));
    const auto corr = boundaries::correlation(cov);
    CHECK(corr(0, 2) == doctest::Approx(1 / std::sqrt(3.0)));
    CHECK(corr(1, 1) == 1.0);
    CHECK_FALSE(boundaries::has_independent_increments(corr));
    CHECK_THROWS_AS(boundaries::correlation(SymMatrix::from_rows(std::vector<double>{0, 0, 0, 1}, 2)), Error);
  }
}

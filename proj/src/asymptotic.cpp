#include "asymptotic.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "error.hpp"

namespace seqcombine::asymptotic {

namespace {

// Integral over [a, b] split at the kinks of the enrollment fraction.
template <class F>
double integrate(F f, double a, double b, std::vector<double> kinks) {
  using boost::math::quadrature::gauss_kronrod;
  kinks.push_back(a);
  kinks.push_back(b);
  std::sort(kinks.begin(), kinks.end());
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < kinks.size(); ++i) {
    const double lo = std::max(a, kinks[i]), hi = std::min(b, kinks[i + 1]);
    if (hi > lo) total += gauss_kronrod<double, 31>::integrate(f, lo, hi, 15, 1e-12);
  }
  return total;
}

void check_pi(double pi) {
  if (!(pi > 0.0 && pi < 1.0)) fail(ErrorCode::DegenerateArm, "treated fraction must lie in (0, 1)");
}

}  // namespace

double enrolled_fraction(double u, double t, double entry_max) {
  return std::clamp((t - u) / entry_max, 0.0, 1.0);
}

double gehan_null_cov(double s, double t, double pi, double entry_max) {
  if (s > t) std::swap(s, t);
  check_pi(pi);
  auto f = [&](double u) {
    const double ws = enrolled_fraction(u, s, entry_max);
    return std::exp(-3.0 * u) * ws * ws * enrolled_fraction(u, t, entry_max);
  };
  return pi * (1.0 - pi) * integrate(f, 0.0, s, {s - entry_max, t - entry_max});
}

double rmst_null_cov(double restriction_j, double restriction_k, double t_k, double pi, double entry_max) {
  if (restriction_j > restriction_k) std::swap(restriction_j, restriction_k);
  if (restriction_k > t_k) fail(ErrorCode::RestrictionExceedsFollowup, "restriction exceeds the analysis time");
  check_pi(pi);
  const double tail_j = std::exp(-restriction_j), tail_k = std::exp(-restriction_k);
  auto f = [&](double u) {
    const double e = std::exp(-u);
    return (e - tail_j) * (e - tail_k) / (e * enrolled_fraction(u, t_k, entry_max));
  };
  return (1.0 / pi + 1.0 / (1.0 - pi)) * integrate(f, 0.0, restriction_j, {t_k - entry_max});
}

matrix::SymMatrix gehan_null_matrix(std::span<const double> times, double pi, double entry_max) {
  matrix::SymMatrix out(times.size());
  for (std::size_t j = 0; j < times.size(); ++j)
    for (std::size_t k = j; k < times.size(); ++k) out.set(j, k, gehan_null_cov(times[j], times[k], pi, entry_max));
  return out;
}

matrix::SymMatrix rmst_null_matrix(std::span<const double> times, std::span<const double> restrictions,
                                   double pi, double entry_max) {
  if (times.size() != restrictions.size()) fail(ErrorCode::DimensionMismatch, "times and restrictions differ in length");
  matrix::SymMatrix out(times.size());
  for (std::size_t j = 0; j < times.size(); ++j)
    for (std::size_t k = j; k < times.size(); ++k)
      out.set(j, k, rmst_null_cov(restrictions[j], restrictions[k], times[k], pi, entry_max));
  return out;
}

}  // namespace seqcombine::asymptotic

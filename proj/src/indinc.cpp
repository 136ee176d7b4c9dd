#include "indinc.hpp"

#include <cmath>
#include <sstream>

#include "error.hpp"

namespace seqcombine::indinc {

CombinedStat combine(std::span<const double> x, const SymMatrix& cov, std::span<const double> dir) {
  const std::size_t j = x.size();
  if (j == 0 || dir.size() != j || cov.dim() < j) {
    fail(ErrorCode::DimensionMismatch, "statistic path, direction and covariance disagree on looks");
  }
  const auto factor = matrix::chol_decompose(cov.leading(j));
  const std::vector<double> w = matrix::chol_solve(factor, dir);

  CombinedStat out;
  for (std::size_t i = 0; i < j; ++i) {
    out.y += w[i] * x[i];
    out.variance += w[i] * dir[i];
  }
  if (!(out.variance > kDegenerateVariance)) {
    std::ostringstream os;
    os << "direction has variance " << out.variance << " at look " << j;
    fail(ErrorCode::DegenerateDirection, os.str());
  }
  out.z = out.y / std::sqrt(out.variance);
  return out;
}

CombinedStat combine(const StatPath& path, const DirectionVector& dir) {
  return combine(path.values, path.cov, dir.values);
}

TransformedPath transform_path(const SymMatrix& v, std::span<const double> b,
                               std::span<const double> x) {
  const std::size_t k = v.dim();
  if (b.size() != k || x.size() != k) {
    fail(ErrorCode::DimensionMismatch, "b and X must have length K");
  }
  TransformedPath out;
  out.coefficients.reserve(k);
  std::vector<double> b_j(k, 0.0);
  for (std::size_t j = 1; j <= k; ++j) {
    b_j[j - 1] = b[j - 1];
    out.coefficients.push_back(matrix::padded_geninverse(v, j).apply(b_j));
  }
  out.y.resize(k);
  for (std::size_t j = 0; j < k; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < k; ++i) s += out.coefficients[j][i] * x[i];
    out.y[j] = s;
  }
  out.covariance = SymMatrix(k);
  for (std::size_t j = 0; j < k; ++j)
    for (std::size_t l = j; l < k; ++l)
      out.covariance.set(j, l, matrix::bilinear_form(out.coefficients[j], v, out.coefficients[l]));
  return out;
}

IncrementCheck check_independent_increments(const SymMatrix& v, IncrementKind kind, double tol) {
  IncrementCheck out;
  for (std::size_t j = 0; j < v.dim(); ++j) {
    for (std::size_t k = j + 1; k < v.dim(); ++k) {
      const double ref = kind == IncrementKind::Statistic ? v(j, j) : v(k, k);
      const double dev = std::abs(v(j, k) - ref);
      if (dev > out.max_deviation) {
        out.max_deviation = dev;
        out.row = j + 1;
        out.col = k + 1;
      }
    }
  }
  out.holds = out.max_deviation <= tol;
  return out;
}

std::vector<double> recover_b(const std::vector<std::vector<double>>& a, const SymMatrix& v) {
  const std::size_t k = v.dim();
  if (a.size() != k) fail(ErrorCode::DimensionMismatch, "need one coefficient vector per look");
  std::vector<double> b(k);
  for (std::size_t j = 0; j < k; ++j) {
    if (a[j].size() != k) fail(ErrorCode::DimensionMismatch, "coefficient vectors must have length K");
    if (a[j][j] == 0.0) {
      std::ostringstream os;
      os << "combination at look " << j + 1 << " does not include X_" << j + 1;
      fail(ErrorCode::TrivialCombination, os.str());
    }
    // j-th entry of V_j a_j: only the leading block of V participates.
    double q = 0.0;
    for (std::size_t i = 0; i <= j; ++i) q += v(j, i) * a[j][i];
    b[j] = q;
  }
  return b;
}

}  // namespace seqcombine::indinc

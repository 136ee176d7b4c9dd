#pragma once

// Sequential linear combinations with independent increments.
//
// Given sequential statistics X_1..X_K with covariance V and any direction
// b, the combinations Y_j = a_j' X with a_j = V_j^- b_j (b_j = b truncated
// to its first j entries) satisfy cov(Y_j, Y_k) = var(Y_j) for j <= k.
// Choosing b proportional to the mean of X under a targeted alternative
// maximizes the noncentrality of the standardized Y_j at every look.

#include <cstddef>
#include <span>
#include <vector>

#include "matrix.hpp"

namespace seqcombine::indinc {

using matrix::SymMatrix;

// Variance at or below this value means the direction carries no signal.
inline constexpr double kDegenerateVariance = 1e-14;

struct StatPath {
  std::vector<double> values;  // X_1..X_j
  SymMatrix cov;               // dim >= j

  std::size_t looks() const noexcept { return values.size(); }
};

struct DirectionVector {
  std::vector<double> values;  // b_1..b_j
};

struct CombinedStat {
  double y = 0.0;
  double variance = 0.0;
  double z = 0.0;
};

// y = b_j' V_j^- X_j, variance = b_j' V_j^- b_j, z = y / sqrt(variance).
// Throws NotPositiveDefinite or DegenerateDirection.
CombinedStat combine(std::span<const double> x, const SymMatrix& cov, std::span<const double> dir);
CombinedStat combine(const StatPath& path, const DirectionVector& dir);

struct TransformedPath {
  std::vector<std::vector<double>> coefficients;  // a_1..a_K, each of length K
  std::vector<double> y;
  SymMatrix covariance;  // a_j' V a_k
};

TransformedPath transform_path(const SymMatrix& v, std::span<const double> b,
                               std::span<const double> x);

enum class IncrementKind {
  Statistic,  // cov(j, k) == var(j) for j <= k
  Estimator,  // cov(j, k) == var(k) for j <= k
};

struct IncrementCheck {
  double max_deviation = 0.0;
  std::size_t row = 0;  // 1-based location of the largest deviation, 0 if none
  std::size_t col = 0;
  bool holds = true;
};

inline constexpr double kAlgebraicTolerance = 1e-8;
inline constexpr double kEmpiricalTolerance = 0.02;

IncrementCheck check_independent_increments(const SymMatrix& v, IncrementKind kind,
                                            double tol = kAlgebraicTolerance);

// Converse direction: given coefficient vectors a_1..a_K whose combinations
// have independent increments, returns the b that generates them, with
// b_j = (V_j a_j)_j. Throws TrivialCombination when some a_jj == 0.
std::vector<double> recover_b(const std::vector<std::vector<double>>& a, const SymMatrix& v);

}  // namespace seqcombine::indinc

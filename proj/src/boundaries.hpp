#pragma once

// Two-sided symmetric stopping boundaries from an alpha-spending plan.
//
// Two solvers share one contract: looks arrive one at a time, each look's
// critical value is fixed once computed, and the target for look j is the
// planned cumulative alpha minus what earlier looks actually spent. A look
// that is skipped (no usable statistic) therefore passes its spend on.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "matrix.hpp"

namespace seqcombine::boundaries {

inline constexpr double kMaxCritical = 8.0;
inline constexpr std::size_t kDefaultGridPoints = 601;
inline constexpr std::size_t kDefaultShifts = 8;
inline constexpr std::size_t kDefaultPoints = 1u << 14;

struct SpendingPlan {
  std::vector<double> cumulative;  // fractions of alpha, ending at 1
  double alpha = 0.05;

  // (0.05, 0.1, 0.4, 0.7, 1) x 0.05
  static SpendingPlan standard();

  std::size_t looks() const noexcept { return cumulative.size(); }
  // Planned cumulative alpha through 1-based look j.
  double cumulative_alpha(std::size_t j) const;
  // Throws InvalidSpec.
  void validate() const;

  friend bool operator==(const SpendingPlan&, const SpendingPlan&) = default;
};

enum class Method { Indinc, Mvn };
const char* to_string(Method m) noexcept;
Method parse_method(const std::string& s);

struct BoundaryStep {
  double c = kMaxCritical;
  double target = 0.0;    // spend requested at this look
  double crossing = 0.0;  // achieved P(first crossing here)
  double error = 0.0;     // QMC error estimate; 0 for the grid recursion
  bool spend_too_small = false;

  friend bool operator==(const BoundaryStep&, const BoundaryStep&) = default;
};

struct BoundarySchedule {
  Method method = Method::Indinc;
  std::uint64_t seed = 0;  // QMC shift seed, unused by the grid recursion
  std::vector<BoundaryStep> steps;

  std::vector<double> critical_values() const;
  // Running sums of crossing probabilities.
  std::vector<double> cumulative() const;

  friend bool operator==(const BoundarySchedule&, const BoundarySchedule&) = default;
};

// Independent-increments recursion on the score scale S_j = Z_j sqrt(v_j).
// The sub-density of S_j on the continuation region is carried on a Simpson
// grid spanning that region.
class IndincBoundarySolver {
 public:
  explicit IndincBoundarySolver(std::size_t grid_points = kDefaultGridPoints);

  // v must exceed every earlier v (NonMonotoneInformation). target_cumulative
  // is the planned cumulative alpha through this look.
  BoundaryStep add_look(double v, double target_cumulative);

  std::size_t looks() const noexcept { return variances_.size(); }
  double spent() const noexcept { return spent_; }

 private:
  double crossing(double c, double v, double* slope) const;
  // Brings the density up to the latest look once its boundary is known.
  void propagate();

  std::size_t grid_points_;
  std::vector<double> variances_;
  double spent_ = 0.0;
  double half_width_ = 0.0;  // continuation half width on the score scale
  std::vector<double> density_;
  double pending_c_ = kMaxCritical;
  bool stale_ = false;
};

// Genz sequential conditioning with a randomly shifted rank-1 lattice. The
// sample set is extended look by look; the current look's dimension is
// integrated exactly given the earlier draws.
class MvnBoundarySolver {
 public:
  MvnBoundarySolver(std::uint64_t seed, std::size_t shifts = kDefaultShifts,
                    std::size_t points = kDefaultPoints);

  // corr_row holds the correlations of the new look with every earlier look,
  // followed by the unit diagonal. Throws NotPositiveDefinite.
  BoundaryStep add_look(std::span<const double> corr_row, double target_cumulative);

  std::size_t looks() const noexcept { return rows_.size(); }
  double spent() const noexcept { return spent_; }
  std::uint64_t seed() const noexcept { return seed_; }

 private:
  // Uses the first `shifts` shifts, or all of them when 0.
  void crossing(double c, double& mean, double& err, double* slope, std::size_t shifts) const;

  std::uint64_t seed_;
  std::size_t shifts_;
  std::size_t points_;
  std::vector<std::vector<double>> rows_;  // Cholesky rows
  std::vector<double> shift_;              // shifts_ x dims, grown on demand
  std::vector<double> weight_;             // P(no crossing so far) per sample
  std::vector<double> draws_;              // samples x looks, row-major by look
  std::vector<double> cond_mean_;
  double cond_sd_ = 1.0;
  double prev_c_ = kMaxCritical;
  double spent_ = 0.0;
};

struct RectangleResult {
  double probability = 0.0;
  double error = 0.0;  // 3 standard errors across shifts
  std::size_t points = 0;  // lattice size per shift that was finally used
};

inline constexpr double kRectangleTolerance = 5e-5;
inline constexpr std::size_t kMaxRectanglePoints = 1u << 16;

// P(lower < Z < upper) for Z ~ N(0, corr); infinite bounds allowed. The
// lattice is doubled from `points` until the error estimate is within
// tolerance or kMaxRectanglePoints is reached.
RectangleResult mvn_rectangle(std::span<const double> lower, std::span<const double> upper,
                              const matrix::SymMatrix& corr, std::uint64_t seed = 0,
                              std::size_t shifts = kDefaultShifts,
                              std::size_t points = kDefaultPoints,
                              double tolerance = kRectangleTolerance);

// Boundaries through look `looks` (defaults to every entry).
BoundarySchedule indinc_boundaries(std::span<const double> variances, const SpendingPlan& plan,
                                   std::size_t looks = 0,
                                   std::size_t grid_points = kDefaultGridPoints);
BoundarySchedule mvn_boundaries(const matrix::SymMatrix& corr, const SpendingPlan& plan,
                                std::size_t looks = 0, std::uint64_t seed = 0,
                                std::size_t shifts = kDefaultShifts,
                                std::size_t points = kDefaultPoints);

// Correlation from a covariance matrix; throws NotPositiveDefinite on a
// nonpositive diagonal.
matrix::SymMatrix correlation(const matrix::SymMatrix& cov);

// True when cov has the statistic-kind independent-increments pattern, in
// which case its diagonal can drive the grid recursion.
bool has_independent_increments(const matrix::SymMatrix& cov, double tol = 1e-8);

}  // namespace seqcombine::boundaries

#pragma once

// Gehan's Wilcoxon statistic written as a weighted logrank statistic, the
// plain logrank comparator, influence-function (co)variance estimators and
// mean-direction estimators for targeted alternatives.
//
// All statistics are normalized by the potential sample size n:
//   G_n(t) = n^{-1/2} sum_events (W(u,t)/n) {Z - Zbar(u,t)}.
// Standardized quantities do not depend on the choice of n.

#include <cstddef>
#include <span>
#include <vector>

#include "matrix.hpp"
#include "survdata.hpp"

namespace seqcombine::wilcoxon {

using survdata::InterimView;

double gehan_statistic(const InterimView& view, std::size_t n);
double logrank_statistic(const InterimView& view, std::size_t n);
// Hypergeometric variance of the logrank numerator, on the same n scale.
double logrank_variance(const InterimView& view, std::size_t n);

// pi(t){1 - pi(t)} sum_events W(u,t)^2 / n^3
double if_variance(const InterimView& view, std::size_t n);
// pi(t){1 - pi(t)} sum_{events of view_t, u <= s} W(u,s)^2 / n^3; view_s at s <= t.
double if_covariance(const InterimView& view_s, const InterimView& view_t, std::size_t n);

// Log-odds target direction with the -tau factor dropped:
// pi(1 - pi) sum_events W(u,t)/n^2 * S(u-,t), S the pooled Kaplan-Meier.
double mean_logodds(const InterimView& view, std::size_t n);
// Delayed-effect target direction (t_delay = 0 gives proportional hazards):
// pi(1 - pi) sum_{events u > t_delay} W(u,t)/n^2.
double mean_delayed(const InterimView& view, std::size_t n, double t_delay);

// Direction used when acting as if the statistics were efficient: b = var.
std::vector<double> adhoc_direction(std::span<const double> variances);

struct WilcoxonLook {
  double t = 0.0;
  double g = 0.0;
  double pi_hat = 0.0;
  double var_hat = 0.0;
  std::size_t n_ref = 0;
};

// Gehan statistics accumulated look by look. Entry (l, m) of the covariance
// is computed when look m arrives and never revisited.
class WilcoxonPath {
 public:
  WilcoxonPath(std::size_t max_looks, std::size_t n, std::vector<double> t_delays = {});

  // views holds the interim views of looks 1..j; the last one is the new look.
  void add_look(std::span<const InterimView> views);

  std::size_t looks() const noexcept { return looks_.size(); }
  const std::vector<WilcoxonLook>& entries() const noexcept { return looks_; }
  std::vector<double> statistics() const;
  std::vector<double> variances() const;
  // Leading looks() x looks() block is filled.
  const matrix::SymMatrix& cov() const noexcept { return cov_; }
  const std::vector<double>& mean_logodds() const noexcept { return logodds_; }
  // One vector per configured t_delay, in construction order.
  const std::vector<double>& mean_delayed(std::size_t which) const { return delayed_.at(which); }
  const std::vector<double>& t_delays() const noexcept { return t_delays_; }

 private:
  std::size_t n_;
  std::vector<double> t_delays_;
  std::vector<WilcoxonLook> looks_;
  matrix::SymMatrix cov_;
  std::vector<double> logodds_;
  std::vector<std::vector<double>> delayed_;
};

}  // namespace seqcombine::wilcoxon

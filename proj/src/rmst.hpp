#pragma once

// Restricted mean survival time differences at interim looks, their
// influence-function covariance and targeted mean-direction estimators.
// Look j restricts to L_j <= t_j; X_j = n^{1/2} theta_hat_j.

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "matrix.hpp"
#include "survdata.hpp"

namespace seqcombine::rmst {

using survdata::Arm;
using survdata::InterimView;

// Area under the arm's Kaplan-Meier curve on [0, L].
double rmst_estimate(const InterimView& view, Arm arm, double restriction);

// R_1 - R_0. Throws ArmMissing unless both arms have enrolled subjects.
double theta_hat(const InterimView& view, double restriction);

// n_z sum_{events u <= L} d A(u)^2 / (W (W - 1)) with A(u) = int_u^L S_z.
// Terms with W <= 1 are skipped. n_arm defaults to the enrolled arm size.
double rmst_if_variance(const InterimView& view, Arm arm, double restriction,
                        std::optional<double> n_arm = std::nullopt);

// Covariance between restrictions L_j <= L_k, all quantities from view_k.
double rmst_if_covariance(const InterimView& view_k, Arm arm, double restriction_j,
                          double restriction_k, std::optional<double> n_arm = std::nullopt);

// pi^{-1} arm1 + (1 - pi)^{-1} arm0; throws DegenerateArm unless 0 < pi < 1.
double theta_cov_entry(double arm1_term, double arm0_term, double pi_hat);

// int_0^L S(1 - S) du over the pooled Kaplan-Meier.
double rmst_mean_logodds(const InterimView& view, double restriction);
// int_{t_delay}^L S(u) {Lambda(u) - Lambda(t_delay)} du, pooled estimators,
// sign dropped.
double rmst_mean_delayed(const InterimView& view, double restriction, double t_delay);

struct RmstLook {
  double t = 0.0;
  double restriction = 0.0;
  double theta_hat = 0.0;
  double rmst[2] = {0.0, 0.0};
  double arm_var[2] = {0.0, 0.0};
};

// Sequential RMST differences with frozen covariance entries: entry (l, m)
// is computed from the data at look m.
class RmstPath {
 public:
  // n is the potential sample size and pi the potential treated fraction
  // (pi = n_1 / n); only their product structure enters, so the standardized
  // statistics do not depend on either.
  RmstPath(std::size_t max_looks, std::size_t n, double pi, std::vector<double> t_delays = {});

  void add_look(const InterimView& view, double restriction);

  std::size_t looks() const noexcept { return looks_.size(); }
  const std::vector<RmstLook>& entries() const noexcept { return looks_; }
  // X_j = n^{1/2} theta_hat_j
  std::vector<double> statistics() const;
  const matrix::SymMatrix& cov() const noexcept { return cov_; }
  const std::vector<double>& mean_logodds() const noexcept { return logodds_; }
  const std::vector<double>& mean_delayed(std::size_t which) const { return delayed_.at(which); }
  const std::vector<double>& t_delays() const noexcept { return t_delays_; }

 private:
  std::size_t n_;
  double pi_;
  std::vector<double> t_delays_;
  std::vector<RmstLook> looks_;
  matrix::SymMatrix cov_;
  std::vector<double> logodds_;
  std::vector<std::vector<double>> delayed_;
};

}  // namespace seqcombine::rmst

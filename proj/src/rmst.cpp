#include "rmst.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "error.hpp"

namespace seqcombine::rmst {

using survdata::EventTable;
using survdata::StepFn;

namespace {

void check_restriction(const InterimView& view, double restriction) {
  if (restriction > view.analysis_time()) {
    std::ostringstream os;
    os << "restriction time " << restriction << " exceeds analysis time " << view.analysis_time();
    fail(ErrorCode::RestrictionExceedsFollowup, os.str());
  }
  if (restriction < 0.0) fail(ErrorCode::RestrictionExceedsFollowup, "restriction time must be >= 0");
}

// Kaplan-Meier for one arm with running area under the curve, so that
// int_u^L S can be read off at each event time.
struct KmArea {
  EventTable table;
  std::vector<double> surv;  // S right after each event time
  std::vector<double> area;  // int_0^{time[i]} S

  explicit KmArea(const InterimView& view, Arm arm) : table(survdata::event_table(view, arm)) {
    surv.resize(table.size());
    area.resize(table.size());
    double s = 1.0, a = 0.0, prev = 0.0;
    for (std::size_t i = 0; i < table.size(); ++i) {
      a += s * (table.time[i] - prev);
      area[i] = a;
      s *= 1.0 - table.deaths[i] / table.at_risk[i];
      surv[i] = s;
      prev = table.time[i];
    }
  }

  // int_0^L S
  double area_to(double restriction) const {
    const auto it = std::upper_bound(table.time.begin(), table.time.end(), restriction);
    if (it == table.time.begin()) return restriction;
    const std::size_t i = static_cast<std::size_t>(it - table.time.begin()) - 1;
    return area[i] + surv[i] * (restriction - table.time[i]);
  }

  // n_z sum_{u <= L_j} d A(u, L_j) A(u, L_k) / (W (W - 1))
  double if_cross(double restriction_j, double restriction_k, double n_arm) const {
    const double total_j = area_to(restriction_j);
    const double total_k = area_to(restriction_k);
    double s = 0.0;
    for (std::size_t i = 0; i < table.size() && table.time[i] <= restriction_j; ++i) {
      const double w = table.at_risk[i];
      if (w <= 1.0) continue;
      const double a_j = total_j - area[i];
      const double a_k = total_k - area[i];
      s += table.deaths[i] * a_j * a_k / (w * (w - 1.0));
    }
    return n_arm * s;
  }
};

double enrolled(const InterimView& view, Arm arm) { return static_cast<double>(view.count(arm)); }

}  // namespace

double rmst_estimate(const InterimView& view, Arm arm, double restriction) {
  check_restriction(view, restriction);
  return KmArea(view, arm).area_to(restriction);
}

double theta_hat(const InterimView& view, double restriction) {
  if (view.count(Arm::Treatment) == 0 || view.count(Arm::Control) == 0) {
    fail(ErrorCode::ArmMissing, "both arms need enrolled subjects for an RMST difference");
  }
  return rmst_estimate(view, Arm::Treatment, restriction) - rmst_estimate(view, Arm::Control, restriction);
}

double rmst_if_variance(const InterimView& view, Arm arm, double restriction, std::optional<double> n_arm) {
  check_restriction(view, restriction);
  return KmArea(view, arm).if_cross(restriction, restriction, n_arm.value_or(enrolled(view, arm)));
}

double rmst_if_covariance(const InterimView& view_k, Arm arm, double restriction_j, double restriction_k,
                          std::optional<double> n_arm) {
  if (restriction_j > restriction_k) fail(ErrorCode::LookOrder, "need L_j <= L_k");
  check_restriction(view_k, restriction_k);
  return KmArea(view_k, arm).if_cross(restriction_j, restriction_k, n_arm.value_or(enrolled(view_k, arm)));
}

double theta_cov_entry(double arm1_term, double arm0_term, double pi_hat) {
  if (!(pi_hat > 0.0 && pi_hat < 1.0)) {
    fail(ErrorCode::DegenerateArm, "treated fraction must lie strictly between 0 and 1");
  }
  return arm1_term / pi_hat + arm0_term / (1.0 - pi_hat);
}

double rmst_mean_logodds(const InterimView& view, double restriction) {
  check_restriction(view, restriction);
  const StepFn s = survdata::km_estimator(view);
  double total = 0.0, left = 0.0, value = 1.0;
  for (std::size_t i = 0; i < s.times().size() && s.times()[i] < restriction; ++i) {
    total += value * (1.0 - value) * (s.times()[i] - left);
    left = s.times()[i];
    value = s.values()[i];
  }
  total += value * (1.0 - value) * (restriction - left);
  return total;
}

double rmst_mean_delayed(const InterimView& view, double restriction, double t_delay) {
  check_restriction(view, restriction);
  if (t_delay >= restriction) return 0.0;
  const StepFn s = survdata::km_estimator(view);
  const StepFn h = survdata::nelson_aalen(view);
  const double base = h(t_delay);
  // S and Lambda jump at the same pooled event times.
  double total = 0.0, left = t_delay;
  double sv = s(t_delay), hv = h(t_delay) - base;
  const auto& times = s.times();
  auto it = std::upper_bound(times.begin(), times.end(), t_delay);
  for (; it != times.end() && *it < restriction; ++it) {
    const std::size_t i = static_cast<std::size_t>(it - times.begin());
    total += sv * hv * (*it - left);
    left = *it;
    sv = s.values()[i];
    hv = h.values()[i] - base;
  }
  total += sv * hv * (restriction - left);
  return total;
}

RmstPath::RmstPath(std::size_t max_looks, std::size_t n, double pi, std::vector<double> t_delays)
    : n_(n), pi_(pi), t_delays_(std::move(t_delays)), cov_(max_looks), delayed_(t_delays_.size()) {
  if (!(pi > 0.0 && pi < 1.0)) fail(ErrorCode::DegenerateArm, "treated fraction must lie in (0, 1)");
}

void RmstPath::add_look(const InterimView& view, double restriction) {
  const std::size_t k = looks_.size() + 1;
  if (k > cov_.dim()) fail(ErrorCode::LookOrder, "more looks than the design allows");
  if (!looks_.empty() && restriction < looks_.back().restriction) {
    fail(ErrorCode::LookOrder, "restriction times must be nondecreasing");
  }
  check_restriction(view, restriction);
  if (view.count(Arm::Treatment) == 0 || view.count(Arm::Control) == 0) {
    fail(ErrorCode::ArmMissing, "both arms need enrolled subjects for an RMST difference");
  }
  const double nn = static_cast<double>(n_);
  const double n_arm[2] = {(1.0 - pi_) * nn, pi_ * nn};
  const KmArea km[2] = {KmArea(view, Arm::Control), KmArea(view, Arm::Treatment)};

  RmstLook look;
  look.t = view.analysis_time();
  look.restriction = restriction;
  for (int z = 0; z < 2; ++z) {
    look.rmst[z] = km[z].area_to(restriction);
    look.arm_var[z] = km[z].if_cross(restriction, restriction, n_arm[z]);
  }
  look.theta_hat = look.rmst[1] - look.rmst[0];
  cov_.set(k - 1, k - 1, theta_cov_entry(look.arm_var[1], look.arm_var[0], pi_));
  for (std::size_t l = 0; l + 1 < k; ++l) {
    const double lj = looks_[l].restriction;
    cov_.set(l, k - 1, theta_cov_entry(km[1].if_cross(lj, restriction, n_arm[1]),
                                       km[0].if_cross(lj, restriction, n_arm[0]), pi_));
  }
  logodds_.push_back(rmst_mean_logodds(view, restriction));
  for (std::size_t d = 0; d < t_delays_.size(); ++d)
    delayed_[d].push_back(rmst_mean_delayed(view, restriction, t_delays_[d]));
  looks_.push_back(look);
}

std::vector<double> RmstPath::statistics() const {
  std::vector<double> out;
  const double root_n = std::sqrt(static_cast<double>(n_));
  for (const auto& l : looks_) out.push_back(root_n * l.theta_hat);
  return out;
}

}  // namespace seqcombine::rmst

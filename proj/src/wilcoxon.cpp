#include "wilcoxon.hpp"

#include <cmath>

#include "error.hpp"

namespace seqcombine::wilcoxon {

using survdata::Arm;
using survdata::EventTable;

namespace {

double binomial_factor(const InterimView& view) {
  const double p = view.treated_fraction();
  return p * (1.0 - p);
}

// sum_events weight(W) * (d1 - d * W1/W)
template <class Weight>
double weighted_logrank(const EventTable& table, Weight weight) {
  double s = 0.0;
  for (std::size_t i = 0; i < table.size(); ++i) {
    const double zbar = table.at_risk_arm1[i] / table.at_risk[i];
    s += weight(table.at_risk[i]) * (table.deaths_arm1[i] - table.deaths[i] * zbar);
  }
  return s;
}

double table_if_variance(const EventTable& table, double factor, double n) {
  double s = 0.0;
  for (std::size_t i = 0; i < table.size(); ++i) s += table.deaths[i] * table.at_risk[i] * table.at_risk[i];
  return factor * s / (n * n * n);
}

double table_mean_logodds(const EventTable& table, double factor, double n) {
  double s = 0.0, surv = 1.0;
  for (std::size_t i = 0; i < table.size(); ++i) {
    s += table.deaths[i] * table.at_risk[i] * surv;
    surv *= 1.0 - table.deaths[i] / table.at_risk[i];
  }
  return factor * s / (n * n);
}

double table_mean_delayed(const EventTable& table, double factor, double n, double t_delay) {
  double s = 0.0;
  for (std::size_t i = 0; i < table.size(); ++i)
    if (table.time[i] > t_delay) s += table.deaths[i] * table.at_risk[i];
  return factor * s / (n * n);
}

}  // namespace

double gehan_statistic(const InterimView& view, std::size_t n) {
  const double nn = static_cast<double>(n);
  const EventTable table = survdata::event_table(view);
  return weighted_logrank(table, [nn](double w) { return w / nn; }) / std::sqrt(nn);
}

double logrank_statistic(const InterimView& view, std::size_t n) {
  const EventTable table = survdata::event_table(view);
  return weighted_logrank(table, [](double) { return 1.0; }) / std::sqrt(static_cast<double>(n));
}

double logrank_variance(const InterimView& view, std::size_t n) {
  const EventTable table = survdata::event_table(view);
  double s = 0.0;
  for (std::size_t i = 0; i < table.size(); ++i) {
    const double w = table.at_risk[i], d = table.deaths[i];
    const double zbar = table.at_risk_arm1[i] / w;
    const double ties = w > 1.0 ? (w - d) / (w - 1.0) : 1.0;
    s += d * zbar * (1.0 - zbar) * ties;
  }
  return s / static_cast<double>(n);
}

double if_variance(const InterimView& view, std::size_t n) {
  return table_if_variance(survdata::event_table(view), binomial_factor(view), static_cast<double>(n));
}

double if_covariance(const InterimView& view_s, const InterimView& view_t, std::size_t n) {
  const double s = view_s.analysis_time();
  if (s > view_t.analysis_time()) fail(ErrorCode::LookOrder, "covariance requires s <= t");
  const EventTable table = survdata::event_table(view_t);
  const survdata::StepFn at_risk_s = survdata::risk_count(view_s);
  double sum = 0.0;
  for (std::size_t i = 0; i < table.size() && table.time[i] <= s; ++i) {
    const double w = at_risk_s(table.time[i]);
    sum += table.deaths[i] * w * w;
  }
  const double nn = static_cast<double>(n);
  return binomial_factor(view_t) * sum / (nn * nn * nn);
}

double mean_logodds(const InterimView& view, std::size_t n) {
  return table_mean_logodds(survdata::event_table(view), binomial_factor(view), static_cast<double>(n));
}

double mean_delayed(const InterimView& view, std::size_t n, double t_delay) {
  return table_mean_delayed(survdata::event_table(view), binomial_factor(view), static_cast<double>(n), t_delay);
}

std::vector<double> adhoc_direction(std::span<const double> variances) {
  for (double v : variances)
    if (!(v >= 0.0)) fail(ErrorCode::InvalidSpec, "variances must be nonnegative");
  return {variances.begin(), variances.end()};
}

WilcoxonPath::WilcoxonPath(std::size_t max_looks, std::size_t n, std::vector<double> t_delays)
    : n_(n), t_delays_(std::move(t_delays)), cov_(max_looks), delayed_(t_delays_.size()) {}

void WilcoxonPath::add_look(std::span<const InterimView> views) {
  const std::size_t j = views.size();
  if (j != looks_.size() + 1 || j > cov_.dim()) {
    fail(ErrorCode::LookOrder, "looks must be added one at a time, in order");
  }
  const InterimView& now = views.back();
  const EventTable table = survdata::event_table(now);
  const double nn = static_cast<double>(n_);
  const double factor = binomial_factor(now);

  WilcoxonLook look;
  look.t = now.analysis_time();
  look.g = weighted_logrank(table, [nn](double w) { return w / nn; }) / std::sqrt(nn);
  look.pi_hat = now.treated_fraction();
  look.var_hat = table_if_variance(table, factor, nn);
  look.n_ref = n_;

  cov_.set(j - 1, j - 1, look.var_hat);
  for (std::size_t l = 0; l + 1 < j; ++l) cov_.set(l, j - 1, if_covariance(views[l], now, n_));

  logodds_.push_back(table_mean_logodds(table, factor, nn));
  for (std::size_t d = 0; d < t_delays_.size(); ++d)
    delayed_[d].push_back(table_mean_delayed(table, factor, nn, t_delays_[d]));
  looks_.push_back(look);
}

std::vector<double> WilcoxonPath::statistics() const {
  std::vector<double> out;
  for (const auto& l : looks_) out.push_back(l.g);
  return out;
}

std::vector<double> WilcoxonPath::variances() const {
  std::vector<double> out;
  for (const auto& l : looks_) out.push_back(l.var_hat);
  return out;
}

}  // namespace seqcombine::wilcoxon

#include "survdata.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "error.hpp"

namespace seqcombine::survdata {

namespace {

bool by_followup(const Record& a, const Record& b) {
  if (a.followup != b.followup) return a.followup < b.followup;
  // events first among ties keeps the ordering deterministic
  return a.event > b.event;
}

bool selected(const Record& r, Arm arm) {
  return arm == Arm::Pooled || r.arm == static_cast<int>(arm);
}

}  // namespace

InterimView::InterimView(double t, std::vector<Record> records)
    : t_(t), records_(std::move(records)) {
  std::stable_sort(records_.begin(), records_.end(), by_followup);
}

std::size_t InterimView::count(Arm arm) const {
  return static_cast<std::size_t>(
      std::count_if(records_.begin(), records_.end(), [&](const Record& r) { return selected(r, arm); }));
}

std::size_t InterimView::events(Arm arm) const {
  return static_cast<std::size_t>(std::count_if(records_.begin(), records_.end(), [&](const Record& r) {
    return r.event && selected(r, arm);
  }));
}

double InterimView::treated_fraction() const {
  if (records_.empty()) return 0.0;
  return static_cast<double>(count(Arm::Treatment)) / static_cast<double>(records_.size());
}

InterimView InterimView::restrict_to(double s) const {
  if (s > t_) fail(ErrorCode::LookOrder, "cannot restrict a view to a later time");
  std::vector<Record> out;
  out.reserve(records_.size());
  for (const Record& r : records_) {
    if (r.entry > s) continue;
    const double window = s - r.entry;
    Record q = r;
    q.followup = std::min(r.followup, window);
    q.event = r.event && r.followup <= window;
    out.push_back(q);
  }
  return InterimView(s, std::move(out));
}

InterimView interim_view(std::span<const Subject> subjects, double t) {
  std::vector<Record> records;
  records.reserve(subjects.size());
  for (const Subject& s : subjects) {
    if (s.entry > t) continue;
    const double window = t - s.entry;
    records.push_back(Record{std::min(s.event, window), s.event <= window, s.arm, s.entry});
  }
  return InterimView(t, std::move(records));
}

StepFn::StepFn(double initial, std::vector<double> times, std::vector<double> values,
               Continuity continuity)
    : initial_(initial), times_(std::move(times)), values_(std::move(values)), continuity_(continuity) {
  if (times_.size() != values_.size()) {
    fail(ErrorCode::DimensionMismatch, "step function needs one value per jump time");
  }
}

double StepFn::right_limit(double u) const {
  const auto it = std::upper_bound(times_.begin(), times_.end(), u);
  if (it == times_.begin()) return initial_;
  return values_[static_cast<std::size_t>(it - times_.begin()) - 1];
}

double StepFn::left_limit(double u) const {
  const auto it = std::lower_bound(times_.begin(), times_.end(), u);
  if (it == times_.begin()) return initial_;
  return values_[static_cast<std::size_t>(it - times_.begin()) - 1];
}

double StepFn::operator()(double u) const {
  return continuity_ == Continuity::Right ? right_limit(u) : left_limit(u);
}

double StepFn::integral(double a, double b) const {
  if (b <= a) return 0.0;
  double total = 0.0;
  double left = a;
  double value = right_limit(a);
  auto it = std::upper_bound(times_.begin(), times_.end(), a);
  for (; it != times_.end() && *it < b; ++it) {
    total += value * (*it - left);
    left = *it;
    value = values_[static_cast<std::size_t>(it - times_.begin())];
  }
  total += value * (b - left);
  return total;
}

EventTable event_table(const InterimView& view, Arm arm) {
  EventTable table;
  const auto& recs = view.records();
  double remaining = 0.0, remaining1 = 0.0;
  for (const Record& r : recs) {
    if (!selected(r, arm)) continue;
    remaining += 1.0;
    if (r.arm == 1) remaining1 += 1.0;
  }
  std::size_t i = 0;
  while (i < recs.size()) {
    const double u = recs[i].followup;
    double d = 0.0, d1 = 0.0, leaving = 0.0, leaving1 = 0.0;
    for (; i < recs.size() && recs[i].followup == u; ++i) {
      const Record& r = recs[i];
      if (!selected(r, arm)) continue;
      leaving += 1.0;
      if (r.arm == 1) leaving1 += 1.0;
      if (r.event) {
        d += 1.0;
        if (r.arm == 1) d1 += 1.0;
      }
    }
    if (d > 0.0) {
      table.time.push_back(u);
      table.deaths.push_back(d);
      table.deaths_arm1.push_back(d1);
      table.at_risk.push_back(remaining);
      table.at_risk_arm1.push_back(remaining1);
    }
    remaining -= leaving;
    remaining1 -= leaving1;
  }
  return table;
}

StepFn risk_count(const InterimView& view, Arm arm) {
  std::vector<double> times, values;
  double remaining = static_cast<double>(view.count(arm));
  const double initial = remaining;
  const auto& recs = view.records();
  std::size_t i = 0;
  while (i < recs.size()) {
    const double u = recs[i].followup;
    double leaving = 0.0;
    for (; i < recs.size() && recs[i].followup == u; ++i)
      if (selected(recs[i], arm)) leaving += 1.0;
    if (leaving > 0.0) {
      remaining -= leaving;
      times.push_back(u);
      values.push_back(remaining);
    }
  }
  return StepFn(initial, std::move(times), std::move(values), StepFn::Continuity::Left);
}

StepFn km_estimator(const InterimView& view, Arm arm) {
  const EventTable table = event_table(view, arm);
  std::vector<double> values(table.size());
  double s = 1.0;
  for (std::size_t i = 0; i < table.size(); ++i) {
    s *= 1.0 - table.deaths[i] / table.at_risk[i];
    values[i] = s;
  }
  return StepFn(1.0, table.time, std::move(values));
}

StepFn nelson_aalen(const InterimView& view, Arm arm) {
  const EventTable table = event_table(view, arm);
  std::vector<double> values(table.size());
  double h = 0.0;
  for (std::size_t i = 0; i < table.size(); ++i) {
    h += table.deaths[i] / table.at_risk[i];
    values[i] = h;
  }
  return StepFn(0.0, table.time, std::move(values));
}

Family parse_family(const std::string& name) {
  if (name == "null") return Family::Null;
  if (name == "proportional") return Family::Proportional;
  if (name == "logodds") return Family::LogOdds;
  if (name == "delayed") return Family::Delayed;
  fail(ErrorCode::InvalidSpec, "unknown scenario family '" + name + "'");
}

const char* to_string(Family family) noexcept {
  switch (family) {
    case Family::Null: return "null";
    case Family::Proportional: return "proportional";
    case Family::LogOdds: return "logodds";
    case Family::Delayed: return "delayed";
  }
  return "null";
}

void validate(const ScenarioSpec& spec) {
  std::ostringstream os;
  if (spec.n == 0) os << "n must be positive; ";
  if (!(spec.pi > 0.0 && spec.pi < 1.0)) os << "pi must lie in (0, 1); ";
  if (!(spec.entry_max > 0.0) || !std::isfinite(spec.entry_max)) os << "entry_max must be positive; ";
  if (!std::isfinite(spec.delta)) os << "delta must be finite; ";
  if (!(spec.t_delay >= 0.0) || !std::isfinite(spec.t_delay)) os << "t_delay must be >= 0; ";
  if (!os.str().empty()) fail(ErrorCode::InvalidSpec, os.str());
}

double survival(const ScenarioSpec& spec, int arm, double u) {
  if (u <= 0.0) return 1.0;
  const double s0 = std::exp(-u);
  if (arm == 0) return s0;
  const double e = std::exp(spec.delta);
  switch (spec.family) {
    case Family::Null: return s0;
    case Family::Proportional: return std::exp(-u / e);
    case Family::LogOdds: return s0 * e / (1.0 + s0 * (e - 1.0));
    case Family::Delayed:
      if (u < spec.t_delay) return s0;
      return std::exp(-(spec.t_delay + (u - spec.t_delay) / e));
  }
  return s0;
}

double event_time_from_uniform(const ScenarioSpec& spec, int arm, double uniform) {
  const double h = -std::log(uniform);  // exponential(1) cumulative hazard level
  if (arm == 0) return h;
  const double e = std::exp(spec.delta);
  switch (spec.family) {
    case Family::Null: return h;
    case Family::Proportional: return h * e;
    case Family::LogOdds: {
      // solve S_1(T) = uniform for S_0(T)
      const double s0 = uniform / (e - uniform * (e - 1.0));
      return -std::log(s0);
    }
    case Family::Delayed:
      if (h < spec.t_delay) return h;
      return spec.t_delay + (h - spec.t_delay) * e;
  }
  return h;
}

std::vector<Subject> sample_scenario(const ScenarioSpec& spec, Stream& stream) {
  validate(spec);
  std::vector<Subject> out(spec.n);
  for (Subject& s : out) {
    s.entry = spec.entry_max * stream.uniform();
    s.arm = stream.uniform() < spec.pi ? 1 : 0;
    s.event = event_time_from_uniform(spec, s.arm, stream.uniform());
  }
  return out;
}

}  // namespace seqcombine::survdata

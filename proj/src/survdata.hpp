#pragma once

// Trial data under staggered entry and administrative censoring, scenario
// generators, and the counting-process estimators built on interim views.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "rng.hpp"

namespace seqcombine::survdata {

struct Subject {
  double entry = 0.0;  // study time of enrollment
  double event = 0.0;  // event time measured from entry; +inf if never observed
  int arm = 0;         // 0 control, 1 treatment
};

struct Record {
  double followup = 0.0;  // min(T, t - E)
  bool event = false;     // T <= t - E
  int arm = 0;
  double entry = 0.0;
};

enum class Arm { Control = 0, Treatment = 1, Pooled = 2 };

// Administratively censored snapshot at analysis time t. Records are sorted
// by follow-up time.
class InterimView {
 public:
  InterimView() = default;
  InterimView(double t, std::vector<Record> records);

  double analysis_time() const noexcept { return t_; }
  const std::vector<Record>& records() const noexcept { return records_; }
  std::size_t size() const noexcept { return records_.size(); }
  bool empty() const noexcept { return records_.empty(); }
  std::size_t count(Arm arm) const;
  std::size_t events(Arm arm = Arm::Pooled) const;
  // Fraction of enrolled subjects on arm 1; 0 when nobody is enrolled.
  double treated_fraction() const;

  // The view this data would have produced at an earlier time s <= t.
  InterimView restrict_to(double s) const;

 private:
  double t_ = 0.0;
  std::vector<Record> records_;
};

InterimView interim_view(std::span<const Subject> subjects, double t);

// Piecewise-constant function with jumps at ascending times. In the
// right-continuous mode the value at a jump time is the post-jump value
// (counting processes, Kaplan-Meier, Nelson-Aalen); in the left-continuous
// mode it is the pre-jump value (at-risk counts, W(u) = #{U >= u}).
class StepFn {
 public:
  enum class Continuity { Right, Left };

  StepFn(double initial, std::vector<double> times, std::vector<double> values,
         Continuity continuity = Continuity::Right);

  double operator()(double u) const;
  double left_limit(double u) const;
  double right_limit(double u) const;

  double initial() const noexcept { return initial_; }
  const std::vector<double>& times() const noexcept { return times_; }
  const std::vector<double>& values() const noexcept { return values_; }
  Continuity continuity() const noexcept { return continuity_; }

  // Exact integral over [a, b] (a <= b).
  double integral(double a, double b) const;

 private:
  double initial_;
  std::vector<double> times_;
  std::vector<double> values_;
  Continuity continuity_;
};

// Distinct observed event times with their at-risk and event counts. This is
// the common input of every estimator in the library.
struct EventTable {
  std::vector<double> time;
  std::vector<double> deaths;        // d(u)
  std::vector<double> deaths_arm1;   // d_1(u)
  std::vector<double> at_risk;       // W(u) = #{U >= u}
  std::vector<double> at_risk_arm1;  // W_1(u)

  std::size_t size() const noexcept { return time.size(); }
};

EventTable event_table(const InterimView& view, Arm arm = Arm::Pooled);

StepFn risk_count(const InterimView& view, Arm arm = Arm::Pooled);
StepFn km_estimator(const InterimView& view, Arm arm = Arm::Pooled);
StepFn nelson_aalen(const InterimView& view, Arm arm = Arm::Pooled);

enum class Family { Null, Proportional, LogOdds, Delayed };

Family parse_family(const std::string& name);
const char* to_string(Family family) noexcept;

struct ScenarioSpec {
  std::size_t n = 1000;
  double pi = 0.5;
  double entry_max = 2.0;
  Family family = Family::Null;
  double delta = 0.0;
  double t_delay = 0.0;

  friend bool operator==(const ScenarioSpec&, const ScenarioSpec&) = default;
};

void validate(const ScenarioSpec& spec);

// Analytic survival P(T >= u) for the arm under the scenario. The control
// arm is exponential with rate 1 in every family. Positive delta favours
// treatment: hazard ratio exp(-delta) (after t_delay for the delayed family),
// survival odds ratio exp(delta) for log-odds.
double survival(const ScenarioSpec& spec, int arm, double u);

// Event time whose survival probability equals the uniform variate in (0, 1).
double event_time_from_uniform(const ScenarioSpec& spec, int arm, double uniform);

std::vector<Subject> sample_scenario(const ScenarioSpec& spec, Stream& stream);

}  // namespace seqcombine::survdata

#pragma once

// Monte Carlo group sequential trials: one simulated dataset per trial is
// monitored by every requested test, each stopping at its own first crossing.

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "boundaries.hpp"
#include "error.hpp"
#include "matrix.hpp"
#include "rmst.hpp"
#include "survdata.hpp"
#include "wilcoxon.hpp"

namespace seqcombine::mcsim {

enum class CovarianceSource { Estimated, Fixed };
const char* to_string(CovarianceSource s) noexcept;
CovarianceSource parse_covariance_source(const std::string& s);

struct Design {
  std::vector<double> analysis_times{1.0, 1.5, 2.0, 2.5, 3.0};
  boundaries::SpendingPlan plan = boundaries::SpendingPlan::standard();
  std::vector<double> restrictions;  // L_j; empty means t_j - rmst_offset
  double rmst_offset = 0.2;
  std::size_t n = 1000;
  double pi = 0.5;
  double entry_max = 2.0;
  std::size_t grid_points = boundaries::kDefaultGridPoints;
  std::size_t qmc_shifts = boundaries::kDefaultShifts;
  std::size_t qmc_points = boundaries::kDefaultPoints;
  CovarianceSource covariance_source = CovarianceSource::Estimated;

  std::size_t looks() const noexcept { return analysis_times.size(); }
  double restriction(std::size_t j) const;  // 0-based
  // Throws InvalidSpec naming the offending field.
  void validate() const;

  friend bool operator==(const Design&, const Design&) = default;
};

enum class TestFamily {
  WilcoxonUnadjusted,
  WilcoxonAdjusted,
  WilcoxonI,
  WilcoxonII,
  WilcoxonIII,
  WilcoxonIV,
  Logrank,
  Rmst,
  RmstI,
  RmstII,
  RmstIII,
};

struct TestSpec {
  TestFamily family = TestFamily::Logrank;
  std::optional<double> t_delay;  // required for wilcoxon-IV and rmst-III

  std::string name() const;
  boundaries::Method method() const noexcept;
  bool needs_t_delay() const noexcept;
  void validate() const;  // InvalidSpec

  friend bool operator==(const TestSpec&, const TestSpec&) = default;
};

TestFamily parse_test_family(const std::string& s);
const char* to_string(TestFamily f) noexcept;
// The eleven tests of the standard study; t_delay feeds wilcoxon-IV and rmst-III.
std::vector<TestSpec> standard_tests(double t_delay = 0.6);

struct LookRecord {
  double statistic = 0.0;  // X_j for unmodified tests, Y_j for combined ones
  double z = 0.0;
  double boundary = 0.0;   // 0 when not computed
  bool skipped = false;    // no usable statistic at this look
};

struct TrialOutcome {
  std::size_t stop_look = 0;  // 1-based; 0 when the test never stopped
  bool rejected = false;
  bool flagged = false;       // numeric failure, counted as no rejection
  std::string error;
  std::optional<ErrorCode> error_code;
  std::vector<LookRecord> looks;

  // Analyses conducted: the stopping look, or every look when never stopped.
  std::size_t analyses(std::size_t max_looks) const noexcept {
    return stop_look ? stop_look : max_looks;
  }
};

enum class RunMode {
  Monitor,        // boundaries computed, tests stop at first crossing
  CompletePaths,  // statistics only, all looks, no stopping
};

// Per-look quantities shared by the tests of one trial, built once per look.
class SharedLooks {
 public:
  SharedLooks(const Design& design, std::span<const TestSpec> tests);

  // Adds the next look; only the families still needed are updated.
  void add_look(const survdata::InterimView& view, bool need_wilcoxon, bool need_logrank, bool need_rmst);

  std::size_t looks() const noexcept { return views_.size(); }
  const wilcoxon::WilcoxonPath& wilcoxon() const noexcept { return wilcoxon_; }
  const std::vector<double>& logrank() const noexcept { return logrank_; }
  const std::vector<double>& logrank_var() const noexcept { return logrank_var_; }
  const rmst::RmstPath& rmst() const noexcept { return rmst_; }
  // Design look (0-based) of each RMST path entry.
  const std::vector<std::size_t>& rmst_looks() const noexcept { return rmst_looks_; }
  std::size_t wilcoxon_delay_index(double t_delay) const;
  std::size_t rmst_delay_index(double t_delay) const;

 private:
  const Design& design_;
  std::vector<survdata::InterimView> views_;
  wilcoxon::WilcoxonPath wilcoxon_;
  std::vector<double> logrank_, logrank_var_;
  rmst::RmstPath rmst_;
  std::vector<std::size_t> rmst_looks_;
};

// One test's sequential decision process.
class TestMonitor {
 public:
  TestMonitor(TestSpec spec, const Design& design, std::uint64_t solver_seed, RunMode mode);
  ~TestMonitor();
  TestMonitor(TestMonitor&&) noexcept;
  TestMonitor& operator=(TestMonitor&&) noexcept;

  const TestSpec& spec() const noexcept { return spec_; }
  bool done() const noexcept { return outcome_.stop_look != 0 || outcome_.flagged; }
  const TrialOutcome& outcome() const noexcept { return outcome_; }

  // Processes design look j (0-based) using shared quantities through j.
  void observe(std::size_t j, const SharedLooks& shared);
  // Marks the test as failed; it no longer takes part in the trial.
  void flag(ErrorCode code, const std::string& message);

 private:
  struct Solver;
  LookRecord evaluate(std::size_t j, const SharedLooks& shared);

  TestSpec spec_;
  const Design* design_;
  std::uint64_t solver_seed_;
  RunMode mode_;
  std::unique_ptr<Solver> solver_;
  std::vector<std::size_t> active_;  // looks that entered the boundary computation
  TrialOutcome outcome_;
};

// Direction b of a combined test over the looks seen so far; empty for the
// unmodified tests.
std::vector<double> direction(const TestSpec& spec, const SharedLooks& shared);

// Raw statistics of the test's source with their frozen covariance. Logrank
// entries (l, m) are var_l, its independent-increments structure.
struct SourceSnapshot {
  std::vector<double> statistics;
  matrix::SymMatrix cov;
  std::vector<std::size_t> design_looks;  // design look (0-based) of each entry
  std::vector<double> direction;
};
SourceSnapshot source_snapshot(const TestSpec& spec, const SharedLooks& shared);

std::uint64_t solver_seed(std::uint64_t seed, std::uint64_t trial, const TestSpec& test);

// Monitors an existing dataset.
std::vector<TrialOutcome> run_trial(std::span<const survdata::Subject> subjects, const Design& design,
                                    std::span<const TestSpec> tests, std::uint64_t seed,
                                    std::uint64_t trial, RunMode mode = RunMode::Monitor);
// Draws the trial's dataset from its own stream first.
std::vector<TrialOutcome> run_trial(const survdata::ScenarioSpec& scenario, const Design& design,
                                    std::span<const TestSpec> tests, std::uint64_t seed,
                                    std::uint64_t trial, RunMode mode = RunMode::Monitor);

struct StudyOptions {
  std::size_t reps = 10000;
  std::uint64_t seed = 20240601;
  std::size_t threads = 1;
  RunMode mode = RunMode::Monitor;
};

struct TestSummary {
  TestSpec test;
  std::size_t reps = 0;
  std::size_t rejections = 0;
  std::size_t flagged = 0;
  double rate = 0.0;
  double mc_se = 0.0;
  double avg_analyses = 0.0;
  // Complete-path runs only.
  std::optional<matrix::SymMatrix> standardized_cov;

  friend bool operator==(const TestSummary&, const TestSummary&) = default;
};

struct SimReport {
  std::string scenario;
  survdata::ScenarioSpec spec;
  std::uint64_t seed = 0;
  std::size_t reps = 0;
  RunMode mode = RunMode::Monitor;
  std::vector<TestSummary> tests;

  friend bool operator==(const SimReport&, const SimReport&) = default;
};

// ScenarioSpec filled from the design's n, pi and entry law.
survdata::ScenarioSpec scenario_for(const Design& design, survdata::Family family, double delta,
                                    double t_delay = 0.0);

SimReport run_study(const std::string& scenario_name, const survdata::ScenarioSpec& scenario,
                    const Design& design, std::span<const TestSpec> tests, const StudyOptions& options);

// Empirical covariance of the vectors divided by the empirical variance of
// their last component. Throws InsufficientData.
matrix::SymMatrix standardized_cov_report(const std::vector<std::vector<double>>& vectors);

}  // namespace seqcombine::mcsim

#include "mcsim.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <exception>
#include <mutex>
#include <sstream>
#include <thread>

#include "asymptotic.hpp"
#include "error.hpp"
#include "indinc.hpp"
#include "rng.hpp"

namespace seqcombine::mcsim {

using matrix::SymMatrix;

namespace {

constexpr struct {
  TestFamily family;
  const char* name;
} kFamilyNames[] = {
    {TestFamily::WilcoxonUnadjusted, "wilcoxon-unadjusted"},
    {TestFamily::WilcoxonAdjusted, "wilcoxon-adjusted"},
    {TestFamily::WilcoxonI, "wilcoxon-I"},
    {TestFamily::WilcoxonII, "wilcoxon-II"},
    {TestFamily::WilcoxonIII, "wilcoxon-III"},
    {TestFamily::WilcoxonIV, "wilcoxon-IV"},
    {TestFamily::Logrank, "logrank"},
    {TestFamily::Rmst, "rmst"},
    {TestFamily::RmstI, "rmst-I"},
    {TestFamily::RmstII, "rmst-II"},
    {TestFamily::RmstIII, "rmst-III"},
};

enum class Source { Wilcoxon, Logrank, Rmst };

Source source_of(TestFamily f) {
  switch (f) {
    case TestFamily::Logrank:
      return Source::Logrank;
    case TestFamily::Rmst:
    case TestFamily::RmstI:
    case TestFamily::RmstII:
    case TestFamily::RmstIII:
      return Source::Rmst;
    default:
      return Source::Wilcoxon;
  }
}

SymMatrix submatrix(const SymMatrix& m, std::span<const std::size_t> idx) {
  SymMatrix out(idx.size());
  for (std::size_t a = 0; a < idx.size(); ++a)
    for (std::size_t b = 0; b <= a; ++b) out.set(a, b, m(idx[a], idx[b]));
  return out;
}

std::vector<double> pick(std::span<const double> v, std::span<const std::size_t> idx) {
  std::vector<double> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(v[i]);
  return out;
}

std::size_t delay_index(const std::vector<double>& delays, double t) {
  for (std::size_t i = 0; i < delays.size(); ++i)
    if (delays[i] == t) return i;
  fail(ErrorCode::InvalidSpec, "no direction was prepared for this t_delay");
}

void add_delay(std::vector<double>& delays, double t) {
  if (std::find(delays.begin(), delays.end(), t) == delays.end()) delays.push_back(t);
}

std::vector<double> wilcoxon_delays(std::span<const TestSpec> tests) {
  std::vector<double> out;
  for (const auto& t : tests) {
    if (t.family == TestFamily::WilcoxonIII) add_delay(out, 0.0);
    if (t.family == TestFamily::WilcoxonIV) add_delay(out, t.t_delay.value_or(0.0));
  }
  return out;
}

std::vector<double> rmst_delays(std::span<const TestSpec> tests) {
  std::vector<double> out;
  for (const auto& t : tests) {
    if (t.family == TestFamily::RmstII) add_delay(out, 0.0);
    if (t.family == TestFamily::RmstIII) add_delay(out, t.t_delay.value_or(0.0));
  }
  return out;
}

std::vector<double> design_restrictions(const Design& d) {
  std::vector<double> out;
  for (std::size_t j = 0; j < d.looks(); ++j) out.push_back(d.restriction(j));
  return out;
}

}  // namespace

const char* to_string(CovarianceSource s) noexcept { return s == CovarianceSource::Estimated ? "estimated" : "fixed"; }

CovarianceSource parse_covariance_source(const std::string& s) {
  if (s == "estimated") return CovarianceSource::Estimated;
  if (s == "fixed") return CovarianceSource::Fixed;
  fail(ErrorCode::InvalidSpec, "covariance_source must be 'estimated' or 'fixed', got '" + s + "'");
}

double Design::restriction(std::size_t j) const {
  if (!restrictions.empty()) return restrictions.at(j);
  return analysis_times.at(j) - rmst_offset;
}

void Design::validate() const {
  auto bad = [](const std::string& field, const std::string& why) {
    fail(ErrorCode::InvalidSpec, field + ": " + why);
  };
  if (analysis_times.empty()) bad("analysis_times", "at least one look is required");
  double prev = 0.0;
  for (double t : analysis_times) {
    if (!std::isfinite(t) || !(t > prev)) bad("analysis_times", "must be positive and strictly increasing");
    prev = t;
  }
  try {
    plan.validate();
  } catch (const Error& e) {
    bad("spending", e.what());
  }
  if (plan.looks() != looks()) bad("spending", "needs one entry per analysis time");
  if (!restrictions.empty() && restrictions.size() != looks()) bad("restrictions", "needs one entry per analysis time");
  if (!(rmst_offset >= 0.0)) bad("rmst_offset", "must be nonnegative");
  double prev_l = 0.0;
  for (std::size_t j = 0; j < looks(); ++j) {
    const double l = restriction(j);
    if (!(l > 0.0) || l > analysis_times[j]) bad("restrictions", "need 0 < L_j <= t_j");
    if (l < prev_l) bad("restrictions", "must be nondecreasing");
    prev_l = l;
  }
  if (n < 1) bad("n", "must be at least 1");
  if (!(pi > 0.0 && pi < 1.0)) bad("pi", "must lie in (0, 1)");
  if (!(entry_max > 0.0)) bad("entry_max", "must be positive");
  if (grid_points < 5 || grid_points % 2 == 0) bad("grid_points", "must be odd and at least 5");
  if (qmc_shifts < 2) bad("qmc_shifts", "must be at least 2");
  if (qmc_points < 1) bad("qmc_points", "must be at least 1");
}

const char* to_string(TestFamily f) noexcept {
  for (const auto& e : kFamilyNames)
    if (e.family == f) return e.name;
  return "unknown";
}

TestFamily parse_test_family(const std::string& s) {
  for (const auto& e : kFamilyNames)
    if (s == e.name) return e.family;
  fail(ErrorCode::InvalidSpec, "unknown test '" + s + "'");
}

std::string TestSpec::name() const { return to_string(family); }

boundaries::Method TestSpec::method() const noexcept {
  return family == TestFamily::WilcoxonAdjusted || family == TestFamily::Rmst ? boundaries::Method::Mvn
                                                                               : boundaries::Method::Indinc;
}

bool TestSpec::needs_t_delay() const noexcept {
  return family == TestFamily::WilcoxonIV || family == TestFamily::RmstIII;
}

void TestSpec::validate() const {
  if (needs_t_delay()) {
    if (!t_delay) fail(ErrorCode::InvalidSpec, name() + " requires t_delay");
    if (!(*t_delay >= 0.0) || !std::isfinite(*t_delay)) fail(ErrorCode::InvalidSpec, name() + ": t_delay must be >= 0");
  }
}

std::vector<TestSpec> standard_tests(double t_delay) {
  std::vector<TestSpec> out;
  for (const auto& e : kFamilyNames) {
    TestSpec t{e.family, std::nullopt};
    if (t.needs_t_delay()) t.t_delay = t_delay;
    out.push_back(t);
  }
  return out;
}

// ---- shared per-look quantities ----

SharedLooks::SharedLooks(const Design& design, std::span<const TestSpec> tests)
    : design_(design),
      wilcoxon_(design.looks(), design.n, wilcoxon_delays(tests)),
      rmst_(design.looks(), design.n, design.pi, rmst_delays(tests)) {}

void SharedLooks::add_look(const survdata::InterimView& view, bool need_wilcoxon, bool need_logrank,
                           bool need_rmst) {
  views_.push_back(view);
  const std::size_t j = views_.size() - 1;
  if (need_wilcoxon) wilcoxon_.add_look(views_);
  if (need_logrank) {
    logrank_.push_back(wilcoxon::logrank_statistic(view, design_.n));
    logrank_var_.push_back(wilcoxon::logrank_variance(view, design_.n));
  }
  if (need_rmst) {
    if (view.count(survdata::Arm::Treatment) > 0 && view.count(survdata::Arm::Control) > 0) {
      rmst_.add_look(view, design_.restriction(j));
      rmst_looks_.push_back(j);
    }
  }
}

std::size_t SharedLooks::wilcoxon_delay_index(double t_delay) const {
  return delay_index(wilcoxon_.t_delays(), t_delay);
}

std::size_t SharedLooks::rmst_delay_index(double t_delay) const { return delay_index(rmst_.t_delays(), t_delay); }

std::vector<double> direction(const TestSpec& spec, const SharedLooks& shared) {
  switch (spec.family) {
    case TestFamily::WilcoxonI:
      return shared.wilcoxon().variances();
    case TestFamily::WilcoxonII:
      return shared.wilcoxon().mean_logodds();
    case TestFamily::WilcoxonIII:
      return shared.wilcoxon().mean_delayed(shared.wilcoxon_delay_index(0.0));
    case TestFamily::WilcoxonIV:
      return shared.wilcoxon().mean_delayed(shared.wilcoxon_delay_index(*spec.t_delay));
    case TestFamily::RmstI:
      return shared.rmst().mean_logodds();
    case TestFamily::RmstII:
      return shared.rmst().mean_delayed(shared.rmst_delay_index(0.0));
    case TestFamily::RmstIII:
      return shared.rmst().mean_delayed(shared.rmst_delay_index(*spec.t_delay));
    default:
      return {};
  }
}

SourceSnapshot source_snapshot(const TestSpec& spec, const SharedLooks& shared) {
  SourceSnapshot out;
  switch (source_of(spec.family)) {
    case Source::Wilcoxon:
      out.statistics = shared.wilcoxon().statistics();
      out.cov = shared.wilcoxon().cov().leading(out.statistics.size());
      for (std::size_t l = 0; l < out.statistics.size(); ++l) out.design_looks.push_back(l);
      break;
    case Source::Rmst:
      out.statistics = shared.rmst().statistics();
      out.cov = shared.rmst().cov().leading(out.statistics.size());
      out.design_looks = shared.rmst_looks();
      break;
    case Source::Logrank: {
      out.statistics = shared.logrank();
      const auto& v = shared.logrank_var();
      out.cov = SymMatrix(v.size());
      for (std::size_t a = 0; a < v.size(); ++a)
        for (std::size_t b = 0; b <= a; ++b) out.cov.set(a, b, v[b]);
      for (std::size_t l = 0; l < v.size(); ++l) out.design_looks.push_back(l);
      break;
    }
  }
  out.direction = direction(spec, shared);
  return out;
}

// ---- per-test monitor ----

struct TestMonitor::Solver {
  std::optional<boundaries::IndincBoundarySolver> indinc;
  std::optional<boundaries::MvnBoundarySolver> mvn;
  std::optional<SymMatrix> fixed_corr;
};

TestMonitor::TestMonitor(TestSpec spec, const Design& design, std::uint64_t solver_seed, RunMode mode)
    : spec_(std::move(spec)), design_(&design), solver_seed_(solver_seed), mode_(mode),
      solver_(std::make_unique<Solver>()) {
  spec_.validate();
  if (mode_ == RunMode::Monitor) {
    if (spec_.method() == boundaries::Method::Indinc) {
      solver_->indinc.emplace(design.grid_points);
    } else {
      solver_->mvn.emplace(solver_seed_, design.qmc_shifts, design.qmc_points);
    }
  }
  if (spec_.method() == boundaries::Method::Mvn && design.covariance_source == CovarianceSource::Fixed) {
    const SymMatrix cov = spec_.family == TestFamily::Rmst
                              ? asymptotic::rmst_null_matrix(design.analysis_times, design_restrictions(design),
                                                             design.pi, design.entry_max)
                              : asymptotic::gehan_null_matrix(design.analysis_times, design.pi, design.entry_max);
    solver_->fixed_corr = boundaries::correlation(cov);
  }
}

TestMonitor::~TestMonitor() = default;
TestMonitor::TestMonitor(TestMonitor&&) noexcept = default;
TestMonitor& TestMonitor::operator=(TestMonitor&&) noexcept = default;

LookRecord TestMonitor::evaluate(std::size_t j, const SharedLooks& shared) {
  LookRecord rec;
  rec.skipped = true;
  const Source source = source_of(spec_.family);

  // Raw statistics, covariance and candidate looks (indices into the source).
  std::vector<double> x;
  const SymMatrix* cov = nullptr;
  std::vector<std::size_t> design_look;  // source index -> design look
  if (source == Source::Wilcoxon) {
    x = shared.wilcoxon().statistics();
    cov = &shared.wilcoxon().cov();
    for (std::size_t l = 0; l < x.size(); ++l) design_look.push_back(l);
  } else if (source == Source::Rmst) {
    x = shared.rmst().statistics();
    cov = &shared.rmst().cov();
    design_look = shared.rmst_looks();
  }

  if (source == Source::Logrank) {
    const double v = shared.logrank_var().at(j);
    if (!(v > indinc::kDegenerateVariance)) return rec;
    rec.statistic = shared.logrank().at(j);
    rec.z = rec.statistic / std::sqrt(v);
    rec.skipped = false;
    if (mode_ == RunMode::Monitor) rec.boundary = solver_->indinc->add_look(v, design_->plan.cumulative_alpha(j + 1)).c;
    return rec;
  }

  if (design_look.empty() || design_look.back() != j) return rec;
  // Looks whose raw statistic has positive variance; the newest must be one.
  std::vector<std::size_t> active;
  for (std::size_t i = 0; i < x.size(); ++i)
    if ((*cov)(i, i) > indinc::kDegenerateVariance) active.push_back(i);
  const std::size_t now = x.size() - 1;
  if (active.empty() || active.back() != now) return rec;
  const double target = design_->plan.cumulative_alpha(j + 1);

  const bool unmodified = spec_.family == TestFamily::WilcoxonUnadjusted ||
                          spec_.family == TestFamily::WilcoxonAdjusted || spec_.family == TestFamily::Rmst;
  if (unmodified) {
    const double v = (*cov)(now, now);
    rec.statistic = x[now];
    rec.z = x[now] / std::sqrt(v);
    rec.skipped = false;
    if (mode_ != RunMode::Monitor) return rec;
    if (spec_.family == TestFamily::WilcoxonUnadjusted) {
      rec.boundary = solver_->indinc->add_look(v, target).c;
      return rec;
    }
    std::vector<double> row;
    for (std::size_t i : active_) {
      const std::size_t src = i;  // active_ holds source indices for mvn tests
      if (solver_->fixed_corr) {
        row.push_back((*solver_->fixed_corr)(design_look[src], j));
      } else {
        row.push_back((*cov)(src, now) / std::sqrt((*cov)(src, src) * v));
      }
    }
    row.push_back(1.0);
    rec.boundary = solver_->mvn->add_look(row, target).c;
    active_.push_back(now);
    return rec;
  }

  // Combined statistics Y_j = b_j' V_j^- X_j over the active looks.
  const std::vector<double> b = direction(spec_, shared);
  indinc::CombinedStat y;
  try {
    y = indinc::combine(pick(x, active), submatrix(*cov, active), pick(b, active));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::DegenerateDirection) return rec;
    throw;
  }
  rec.statistic = y.y;
  rec.z = y.z;
  rec.skipped = false;
  if (mode_ == RunMode::Monitor) rec.boundary = solver_->indinc->add_look(y.variance, target).c;
  return rec;
}

void TestMonitor::observe(std::size_t j, const SharedLooks& shared) {
  if (done()) return;
  try {
    const LookRecord rec = evaluate(j, shared);
    outcome_.looks.resize(j);
    outcome_.looks.push_back(rec);
    if (mode_ == RunMode::Monitor && !rec.skipped && std::fabs(rec.z) >= rec.boundary) {
      outcome_.rejected = true;
      outcome_.stop_look = j + 1;
    }
  } catch (const Error& e) {
    flag(e.code(), e.what());
  }
}

void TestMonitor::flag(ErrorCode code, const std::string& message) {
  outcome_.flagged = true;
  outcome_.error_code = code;
  outcome_.error = std::string(seqcombine::to_string(code)) + ": " + message;
}

std::uint64_t solver_seed(std::uint64_t seed, std::uint64_t trial, const TestSpec& test) {
  const std::uint64_t delay_bits = test.t_delay ? std::bit_cast<std::uint64_t>(*test.t_delay) : 0;
  const std::uint64_t sub = (static_cast<std::uint64_t>(test.family) + 1) ^ splitmix64(delay_bits);
  return stream_key(seed, trial, StreamPurpose::BoundarySolver, sub);
}

std::vector<TrialOutcome> run_trial(std::span<const survdata::Subject> subjects, const Design& design,
                                    std::span<const TestSpec> tests, std::uint64_t seed, std::uint64_t trial,
                                    RunMode mode) {
  std::vector<TestMonitor> monitors;
  monitors.reserve(tests.size());
  for (const auto& t : tests) monitors.emplace_back(t, design, solver_seed(seed, trial, t), mode);
  SharedLooks shared(design, tests);

  for (std::size_t j = 0; j < design.looks(); ++j) {
    bool need[3] = {false, false, false};
    for (const auto& m : monitors)
      if (!m.done()) need[static_cast<int>(source_of(m.spec().family))] = true;
    if (!need[0] && !need[1] && !need[2]) break;
    const auto view = survdata::interim_view(subjects, design.analysis_times[j]);
    try {
      shared.add_look(view, need[0], need[1], need[2]);
    } catch (const Error& e) {
      // A failure in a shared estimator disables every test built on it.
      for (auto& m : monitors) {
        if (!m.done()) m.flag(e.code(), e.what());
      }
      break;
    }
    for (auto& m : monitors) m.observe(j, shared);
  }

  std::vector<TrialOutcome> out;
  out.reserve(monitors.size());
  for (const auto& m : monitors) out.push_back(m.outcome());
  return out;
}

std::vector<TrialOutcome> run_trial(const survdata::ScenarioSpec& scenario, const Design& design,
                                    std::span<const TestSpec> tests, std::uint64_t seed, std::uint64_t trial,
                                    RunMode mode) {
  Stream stream(seed, trial, StreamPurpose::TrialData);
  const auto subjects = survdata::sample_scenario(scenario, stream);
  return run_trial(subjects, design, tests, seed, trial, mode);
}

survdata::ScenarioSpec scenario_for(const Design& design, survdata::Family family, double delta, double t_delay) {
  survdata::ScenarioSpec s;
  s.n = design.n;
  s.pi = design.pi;
  s.entry_max = design.entry_max;
  s.family = family;
  s.delta = delta;
  s.t_delay = t_delay;
  return s;
}

SymMatrix standardized_cov_report(const std::vector<std::vector<double>>& vectors) {
  if (vectors.size() < 2) fail(ErrorCode::InsufficientData, "need at least two complete statistic vectors");
  const std::size_t k = vectors.front().size();
  if (k == 0) fail(ErrorCode::InsufficientData, "statistic vectors are empty");
  for (const auto& v : vectors)
    if (v.size() != k) fail(ErrorCode::DimensionMismatch, "statistic vectors differ in length");
  const double r = static_cast<double>(vectors.size());
  std::vector<double> mean(k, 0.0);
  for (const auto& v : vectors)
    for (std::size_t i = 0; i < k; ++i) mean[i] += v[i];
  for (auto& m : mean) m /= r;
  SymMatrix cov(k);
  for (std::size_t a = 0; a < k; ++a)
    for (std::size_t b = 0; b <= a; ++b) {
      double s = 0.0;
      for (const auto& v : vectors) s += (v[a] - mean[a]) * (v[b] - mean[b]);
      cov.set(a, b, s / (r - 1.0));
    }
  const double last = cov(k - 1, k - 1);
  if (!(last > 0.0)) fail(ErrorCode::InsufficientData, "last component has zero empirical variance");
  SymMatrix out(k);
  for (std::size_t a = 0; a < k; ++a)
    for (std::size_t b = 0; b <= a; ++b) out.set(a, b, cov(a, b) / last);
  return out;
}

SimReport run_study(const std::string& scenario_name, const survdata::ScenarioSpec& scenario, const Design& design,
                    std::span<const TestSpec> tests, const StudyOptions& options) {
  design.validate();
  survdata::validate(scenario);
  for (const auto& t : tests) t.validate();
  if (options.reps < 1) fail(ErrorCode::InvalidSpec, "reps must be at least 1");

  struct Compact {
    std::uint8_t stop_look = 0;
    bool rejected = false;
    bool flagged = false;
    std::vector<double> path;
  };
  const std::size_t nt = tests.size();
  const std::size_t k = design.looks();
  std::vector<Compact> results(options.reps * nt);

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t trial = next.fetch_add(1);
      if (trial >= options.reps) return;
      try {
        const auto outcomes = run_trial(scenario, design, tests, options.seed, trial, options.mode);
        for (std::size_t i = 0; i < nt; ++i) {
          Compact& c = results[trial * nt + i];
          c.stop_look = static_cast<std::uint8_t>(outcomes[i].stop_look);
          c.rejected = outcomes[i].rejected;
          c.flagged = outcomes[i].flagged;
          if (options.mode == RunMode::CompletePaths && !c.flagged && outcomes[i].looks.size() == k) {
            for (const auto& l : outcomes[i].looks) c.path.push_back(l.statistic);
          }
        }
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = options.reps;
        return;
      }
    }
  };
  const std::size_t threads = std::max<std::size_t>(1, std::min(options.threads, options.reps));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);

  SimReport report;
  report.scenario = scenario_name;
  report.spec = scenario;
  report.seed = options.seed;
  report.reps = options.reps;
  report.mode = options.mode;
  for (std::size_t i = 0; i < nt; ++i) {
    TestSummary s;
    s.test = tests[i];
    s.reps = options.reps;
    double analyses = 0.0;
    std::vector<std::vector<double>> paths;
    for (std::size_t r = 0; r < options.reps; ++r) {
      const Compact& c = results[r * nt + i];
      s.rejections += c.rejected;
      s.flagged += c.flagged;
      analyses += static_cast<double>(c.stop_look ? c.stop_look : k);
      if (!c.path.empty()) paths.push_back(c.path);
    }
    const double reps = static_cast<double>(options.reps);
    s.rate = static_cast<double>(s.rejections) / reps;
    s.mc_se = std::sqrt(s.rate * (1.0 - s.rate) / reps);
    s.avg_analyses = analyses / reps;
    if (options.mode == RunMode::CompletePaths && paths.size() >= 2) {
      try {
        s.standardized_cov = standardized_cov_report(paths);
      } catch (const Error&) {
      }
    }
    report.tests.push_back(std::move(s));
  }
  return report;
}

}  // namespace seqcombine::mcsim

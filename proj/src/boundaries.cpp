#include "boundaries.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>
#include <sstream>

#include "error.hpp"
#include "normal.hpp"
#include "rng.hpp"

namespace seqcombine::boundaries {

namespace {

using normal::cdf;
using normal::pdf;
using normal::upper;

// Tail probability below which a spend cannot be resolved; 2 P(Z > 8).
const double kCapCrossing = 2.0 * normal::upper(kMaxCritical);

// P(a < Z < b) computed on whichever side keeps precision.
double interval_prob(double a, double b) {
  if (a > 0.0) return upper(a) - upper(b);
  return cdf(b) - cdf(a);
}

struct ValueSlope {
  double value = 0.0;
  double slope = 0.0;
};

// Solves decreasing f(c) = target on [0, kMaxCritical] by Newton steps kept
// inside a shrinking bracket; f(kMaxCritical) < target is assumed.
template <class F>
double solve_decreasing(F f, double target, double guess) {
  double lo = 0.0, hi = kMaxCritical;
  double c = std::clamp(guess, lo, hi);
  for (int iter = 0; iter < 100; ++iter) {
    const ValueSlope fs = f(c);
    const double g = fs.value - target;
    if (std::fabs(g) <= 1e-7 * target) return c;
    if (g > 0.0) lo = c; else hi = c;
    double next = fs.slope < 0.0 ? c - g / fs.slope : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::fabs(next - c) < 1e-11 || hi - lo < 1e-11) return next;
    c = next;
  }
  return c;
}

std::vector<double> simpson_weights(std::size_t n, double h) {
  std::vector<double> w(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) w[i] = (i == 0 || i + 1 == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
  for (auto& x : w) x *= h / 3.0;
  return w;
}

// Antiderivatives of Phi(u) and u Phi(u).
double psi0(double u) { return u * cdf(u) + pdf(u); }
double psi1(double u) { return 0.5 * ((u * u - 1.0) * cdf(u) + u * pdf(u)); }

// Korobov rank-1 lattice z = (1, a, a^2, ...) mod N. For powers of two the
// multiplier minimizes the P2 criterion with weights 1/j^2 over 8 dimensions.
class Lattice {
 public:
  explicit Lattice(std::size_t points) : n_(points), z_(kDims) {
    const std::uint64_t a = multiplier(points);
    z_[0] = 1 % n_;
    for (std::size_t j = 1; j < kDims; ++j) z_[j] = (z_[j - 1] * a) % n_;
  }

  // Baker-transformed coordinate d of point k under the given shift.
  double uniform(std::size_t k, std::size_t d, double shift) const {
    if (d >= kDims) fail(ErrorCode::DimensionMismatch, "lattice dimension too large");
    double x = static_cast<double>((k * z_[d]) % n_) / static_cast<double>(n_) + shift;
    x -= std::floor(x);
    x = 1.0 - std::fabs(2.0 * x - 1.0);
    return std::clamp(x, 1e-15, 1.0 - 1e-15);
  }

 private:
  static constexpr std::size_t kDims = 64;

  static double criterion(std::uint64_t n, std::uint64_t a) {
    const double c = 2.0 * M_PI * M_PI;
    double total = 0.0;
    for (std::uint64_t k = 0; k < n; ++k) {
      double p = 1.0;
      std::uint64_t z = 1;
      for (int j = 0; j < 8; ++j) {
        const double x = static_cast<double>((k * z) % n) / static_cast<double>(n);
        p *= 1.0 + c * (x * x - x + 1.0 / 6.0) / ((j + 1.0) * (j + 1.0));
        z = (z * a) % n;
      }
      total += p;
    }
    return total / static_cast<double>(n) - 1.0;
  }

  static std::uint64_t multiplier(std::uint64_t n) {
    static const std::pair<std::uint64_t, std::uint64_t> table[] = {
        {64, 25},      {128, 61},     {256, 61},     {512, 227},     {1024, 43},     {2048, 691},
        {4096, 1077},  {8192, 3019},  {16384, 7051}, {32768, 13331}, {65536, 21553},
    };
    for (const auto& [size, a] : table)
      if (size == n) return a;
    if (n < 4) return 1;
    // Other sizes: bounded search over multipliers coprime to n.
    std::uint64_t best = 1;
    double best_value = std::numeric_limits<double>::infinity();
    const std::uint64_t stride = 2 * std::max<std::uint64_t>(1, n / 1024);
    for (std::uint64_t a = 3; a <= n / 2; a += stride) {
      if (std::gcd(a, n) != 1) continue;
      const double v = criterion(n, a);
      if (v < best_value) {
        best_value = v;
        best = a;
      }
    }
    return best;
  }

  std::uint64_t n_;
  std::vector<std::uint64_t> z_;
};

const Lattice& lattice_for(std::size_t points) {
  static std::mutex mutex;
  static std::map<std::size_t, std::unique_ptr<Lattice>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[points];
  if (!slot) slot = std::make_unique<Lattice>(points);
  return *slot;
}

// Draw from N(0,1) truncated to (a, b) by inversion at quantile level u.
double truncated_draw(double a, double b, double u) {
  if (a > 0.0) return -truncated_draw(-b, -a, 1.0 - u);
  const double pa = cdf(a);
  const double p = pa + u * (cdf(b) - pa);
  return normal::quantile(std::clamp(p, 1e-300, 1.0 - 1e-16));
}

std::vector<double> draw_shifts(std::uint64_t seed, std::size_t shifts, std::size_t dims) {
  Stream stream(stream_key(seed, 0, StreamPurpose::BoundarySolver, 0));
  std::vector<double> out(shifts * dims);
  for (auto& x : out) x = stream.uniform();
  return out;
}

}  // namespace

SpendingPlan SpendingPlan::standard() { return {{0.05, 0.1, 0.4, 0.7, 1.0}, 0.05}; }

double SpendingPlan::cumulative_alpha(std::size_t j) const {
  if (j == 0) return 0.0;
  if (j > cumulative.size()) fail(ErrorCode::DimensionMismatch, "look beyond the spending plan");
  return cumulative[j - 1] * alpha;
}

void SpendingPlan::validate() const {
  if (cumulative.empty()) fail(ErrorCode::InvalidSpec, "spending plan is empty");
  if (!(alpha > 0.0 && alpha < 1.0)) fail(ErrorCode::InvalidSpec, "alpha must lie in (0, 1)");
  double prev = 0.0;
  for (double f : cumulative) {
    if (!(f >= prev) || f > 1.0) fail(ErrorCode::InvalidSpec, "spending fractions must be nondecreasing in [0, 1]");
    prev = f;
  }
  if (std::fabs(cumulative.back() - 1.0) > 1e-12) fail(ErrorCode::InvalidSpec, "final spending fraction must be 1");
}

const char* to_string(Method m) noexcept { return m == Method::Indinc ? "indinc" : "mvn"; }

Method parse_method(const std::string& s) {
  if (s == "indinc") return Method::Indinc;
  if (s == "mvn") return Method::Mvn;
  fail(ErrorCode::InvalidSpec, "unknown boundary method '" + s + "'");
}

std::vector<double> BoundarySchedule::critical_values() const {
  std::vector<double> out;
  for (const auto& s : steps) out.push_back(s.c);
  return out;
}

std::vector<double> BoundarySchedule::cumulative() const {
  std::vector<double> out;
  double acc = 0.0;
  for (const auto& s : steps) out.push_back(acc += s.crossing);
  return out;
}

// ---- grid recursion ----

IndincBoundarySolver::IndincBoundarySolver(std::size_t grid_points) : grid_points_(grid_points) {
  if (grid_points_ < 5 || grid_points_ % 2 == 0) fail(ErrorCode::InvalidSpec, "grid point count must be odd and >= 5");
}

double IndincBoundarySolver::crossing(double c, double v, double* slope) const {
  const double root_v = std::sqrt(v);
  const double b = c * root_v;
  if (variances_.empty()) {
    if (slope) *slope = -2.0 * pdf(c);
    return 2.0 * upper(c);
  }
  const double sigma = std::sqrt(v - variances_.back());
  const std::size_t n = grid_points_;
  const double h = 2.0 * half_width_ / static_cast<double>(n - 1);
  // Both tails contribute equally because the density is symmetric.
  double total = 0.0, dtotal = 0.0;
  if (sigma >= 10.0 * h) {
    const auto w = simpson_weights(n, h);
    for (std::size_t i = 0; i < n; ++i) {
      const double y = -half_width_ + static_cast<double>(i) * h;
      const double u = (b - y) / sigma;
      total += w[i] * density_[i] * upper(u);
      if (slope) dtotal += w[i] * density_[i] * pdf(u);
    }
  } else {
    // Piecewise-linear density integrated exactly against the normal cdf.
    for (std::size_t i = 0; i + 1 < n; ++i) {
      const double a = -half_width_ + static_cast<double>(i) * h;
      const double ua = (a - b) / sigma, ub = (a + h - b) / sigma;
      if (ub < -9.0) continue;
      const double gs = (density_[i + 1] - density_[i]) / h;
      total += sigma * (density_[i] + gs * (b - a)) * (psi0(ub) - psi0(ua)) +
               gs * sigma * sigma * (psi1(ub) - psi1(ua));
      // d/db of int g(y) Phi((y - b)/sigma) dy = -int g(y) phi((y - b)/sigma)/sigma dy
      if (slope) {
        const double dcdf = interval_prob(ua, ub);
        const double dpdf = pdf(ub) - pdf(ua);
        dtotal += (density_[i] + gs * (b - a)) * dcdf - gs * sigma * dpdf;
      }
    }
    dtotal *= sigma;
  }
  if (slope) *slope = -2.0 * dtotal * root_v / sigma;
  return 2.0 * total;
}

void IndincBoundarySolver::propagate() {
  if (!stale_) return;
  stale_ = false;
  const std::size_t n = grid_points_;
  const double v = variances_.back();
  const double new_half = pending_c_ * std::sqrt(v);
  const double new_h = 2.0 * new_half / static_cast<double>(n - 1);
  std::vector<double> next(n, 0.0);
  const std::size_t mid = n / 2;
  if (variances_.size() == 1) {
    const double sd = std::sqrt(v);
    for (std::size_t i = mid; i < n; ++i) next[i] = pdf((-new_half + static_cast<double>(i) * new_h) / sd) / sd;
  } else {
    const double sigma = std::sqrt(v - variances_[variances_.size() - 2]);
    const double h = 2.0 * half_width_ / static_cast<double>(n - 1);
    if (sigma >= 10.0 * h) {
      const auto w = simpson_weights(n, h);
      std::vector<double> wg(n);
      for (std::size_t j = 0; j < n; ++j) wg[j] = w[j] * density_[j];
      // exp(-d^2/2) along the old grid by the two-term recurrence in d.
      const double e = h / sigma;
      const double q = std::exp(-e * e);
      const auto steps = static_cast<std::ptrdiff_t>(std::ceil(9.0 / e));
      const auto last = static_cast<std::ptrdiff_t>(n) - 1;
      for (std::size_t i = mid; i < n; ++i) {
        const double x = -new_half + static_cast<double>(i) * new_h;
        const auto centre = std::clamp(static_cast<std::ptrdiff_t>(std::lround((x + half_width_) / h)),
                                       std::ptrdiff_t{0}, last);
        const double d0 = (x - (-half_width_ + static_cast<double>(centre) * h)) / sigma;
        const double k0 = std::exp(-0.5 * d0 * d0);
        double s = wg[centre] * k0;
        double k = k0, r = std::exp(d0 * e - 0.5 * e * e);
        for (std::ptrdiff_t j = centre + 1; j <= std::min(last, centre + steps); ++j) {
          k *= r;
          r *= q;
          s += wg[j] * k;
        }
        k = k0;
        r = std::exp(-d0 * e - 0.5 * e * e);
        for (std::ptrdiff_t j = centre - 1; j >= std::max<std::ptrdiff_t>(0, centre - steps); --j) {
          k *= r;
          r *= q;
          s += wg[j] * k;
        }
        next[i] = s * normal::kInvSqrt2Pi / sigma;
      }
    } else {
      const double reach = 9.0 * sigma;
      for (std::size_t i = mid; i < n; ++i) {
        const double x = -new_half + static_cast<double>(i) * new_h;
        const double first = std::floor((x - reach + half_width_) / h);
        const std::size_t j0 = first < 0.0 ? 0 : std::min(n - 1, static_cast<std::size_t>(first));
        double s = 0.0;
        for (std::size_t j = j0; j + 1 < n; ++j) {
          const double a = -half_width_ + static_cast<double>(j) * h;
          if (a > x + reach) break;
          const double ua = (a - x) / sigma, ub = (a + h - x) / sigma;
          const double dcdf = interval_prob(ua, ub);
          const double dpdf = pdf(ub) - pdf(ua);
          const double gs = (density_[j + 1] - density_[j]) / h;
          s += density_[j] * dcdf + gs * ((x - a) * dcdf - sigma * dpdf);
        }
        next[i] = s;
      }
    }
  }
  for (std::size_t i = 0; i < mid; ++i) next[i] = next[n - 1 - i];
  density_ = std::move(next);
  half_width_ = new_half;
}

BoundaryStep IndincBoundarySolver::add_look(double v, double target_cumulative) {
  if (!(v > 0.0) || !std::isfinite(v)) fail(ErrorCode::NonMonotoneInformation, "information must be positive and finite");
  if (!variances_.empty() && !(v > variances_.back())) {
    std::ostringstream os;
    os << "information must increase strictly: " << variances_.back() << " then " << v;
    fail(ErrorCode::NonMonotoneInformation, os.str());
  }
  propagate();
  BoundaryStep step;
  step.target = std::max(0.0, target_cumulative - spent_);
  auto f = [&](double c) {
    ValueSlope r;
    r.value = crossing(c, v, &r.slope);
    return r;
  };
  if (step.target <= kCapCrossing || step.target <= crossing(kMaxCritical, v, nullptr)) {
    step.c = kMaxCritical;
    step.spend_too_small = true;
  } else if (variances_.empty()) {
    step.c = std::min(kMaxCritical, -normal::quantile(0.5 * step.target));
  } else {
    const double guess = std::clamp(-normal::quantile(0.5 * step.target), 0.0, kMaxCritical);
    step.c = solve_decreasing(f, step.target, guess);
  }
  step.crossing = crossing(step.c, v, nullptr);
  spent_ += step.crossing;
  variances_.push_back(v);
  pending_c_ = step.c;
  stale_ = true;
  return step;
}

// ---- QMC conditioning ----

MvnBoundarySolver::MvnBoundarySolver(std::uint64_t seed, std::size_t shifts, std::size_t points)
    : seed_(seed), shifts_(shifts), points_(points) {
  if (shifts_ < 2 || points_ < 1) fail(ErrorCode::InvalidSpec, "QMC needs >= 2 shifts and >= 1 point");
  weight_.assign(shifts_ * points_, 1.0);
  cond_mean_.assign(shifts_ * points_, 0.0);
}

void MvnBoundarySolver::crossing(double c, double& mean, double& err, double* slope, std::size_t shifts) const {
  if (shifts == 0 || shifts > shifts_) shifts = shifts_;
  double sum = 0.0, sum2 = 0.0, dsum = 0.0;
  for (std::size_t r = 0; r < shifts; ++r) {
    double s = 0.0;
    const std::size_t base = r * points_;
    for (std::size_t k = 0; k < points_; ++k) {
      const double w = weight_[base + k];
      if (w == 0.0) continue;
      const double m = cond_mean_[base + k];
      const double hi = (c - m) / cond_sd_, lo = (c + m) / cond_sd_;
      s += w * (upper(hi) + upper(lo));
      if (slope) dsum += w * (pdf(hi) + pdf(lo));
    }
    s /= static_cast<double>(points_);
    sum += s;
    sum2 += s * s;
  }
  const double ns = static_cast<double>(shifts);
  mean = sum / ns;
  const double var = ns > 1.0 ? std::max(0.0, (sum2 - ns * mean * mean) / (ns - 1.0)) : 0.0;
  err = 3.0 * std::sqrt(var / ns);
  if (slope) *slope = -dsum / (static_cast<double>(shifts * points_) * cond_sd_);
}

BoundaryStep MvnBoundarySolver::add_look(std::span<const double> corr_row, double target_cumulative) {
  const std::size_t j = rows_.size();
  if (corr_row.size() != j + 1) fail(ErrorCode::DimensionMismatch, "correlation row has the wrong length");
  if (std::fabs(corr_row[j] - 1.0) > 1e-9) fail(ErrorCode::DimensionMismatch, "correlation diagonal must be 1");
  std::vector<double> row(j + 1, 0.0);
  double rest = 1.0;
  for (std::size_t k = 0; k < j; ++k) {
    double s = corr_row[k];
    for (std::size_t i = 0; i < k; ++i) s -= row[i] * rows_[k][i];
    row[k] = s / rows_[k][k];
    rest -= row[k] * row[k];
  }
  if (!(rest > matrix::kPivotTolerance)) {
    fail(ErrorCode::NotPositiveDefinite, "correlation matrix is not positive definite at look " + std::to_string(j + 1));
  }
  row[j] = std::sqrt(rest);

  const std::size_t total = shifts_ * points_;
  if (j > 0) {
    // Draw the previous look's coordinate now that its boundary is fixed.
    const std::size_t d = j - 1;
    const double c = prev_c_;
    if (shift_.size() < shifts_ * j) {
      const auto more = draw_shifts(seed_ ^ splitmix64(d + 1), shifts_, 1);
      shift_.insert(shift_.end(), more.begin(), more.end());
    }
    draws_.resize(total * j);
    const Lattice& lattice = lattice_for(points_);
    for (std::size_t r = 0; r < shifts_; ++r) {
      const double sh = shift_[d * shifts_ + r];
      for (std::size_t k = 0; k < points_; ++k) {
        const std::size_t s = r * points_ + k;
        const double m = cond_mean_[s];
        const double a = (-c - m) / cond_sd_, b = (c - m) / cond_sd_;
        const double p = interval_prob(a, b);
        if (!(p > 0.0)) {
          weight_[s] = 0.0;
          draws_[d * total + s] = 0.0;
          continue;
        }
        weight_[s] *= p;
        draws_[d * total + s] = truncated_draw(a, b, lattice.uniform(k, d, sh));
      }
    }
    for (std::size_t s = 0; s < total; ++s) {
      double m = 0.0;
      for (std::size_t i = 0; i < j; ++i) m += row[i] * draws_[i * total + s];
      cond_mean_[s] = m;
    }
  }
  cond_sd_ = row[j];
  rows_.push_back(std::move(row));

  BoundaryStep step;
  step.target = std::max(0.0, target_cumulative - spent_);
  double err = 0.0;
  double last_c = -1.0, last_value = 0.0;
  auto solve_with = [&](std::size_t shifts, double guess) {
    auto f = [&](double c) {
      ValueSlope r;
      crossing(c, r.value, err, &r.slope, shifts);
      last_c = shifts == 0 ? c : -1.0;
      last_value = r.value;
      return r;
    };
    return solve_decreasing(f, step.target, guess);
  };
  if (step.target <= kCapCrossing) {
    step.c = kMaxCritical;
    step.spend_too_small = true;
  } else if (j == 0) {
    step.c = std::min(kMaxCritical, -normal::quantile(0.5 * step.target));
  } else {
    double mass = 0.0;
    for (double w : weight_) mass += w;
    mass /= static_cast<double>(total);
    const double ratio = std::min(1.0, step.target / std::max(mass, 1e-300));
    double guess = std::clamp(-normal::quantile(0.5 * ratio), 0.0, kMaxCritical);
    // Pilot solve on one shift, then polish on the full sample.
    guess = solve_with(1, guess);
    step.c = solve_with(0, guess);
    // The solver ends at the cap when even c = 8 spends more than asked.
    step.spend_too_small = step.c >= kMaxCritical - 1e-9;
  }
  if (last_c == step.c) {
    step.crossing = last_value;
  } else {
    crossing(step.c, step.crossing, err, nullptr, 0);
  }
  step.error = err;
  spent_ += step.crossing;
  prev_c_ = step.c;
  return step;
}

namespace {

RectangleResult rectangle_once(std::span<const double> lower, std::span<const double> upper_bounds,
                               const matrix::CholeskyFactor& chol, std::uint64_t seed, std::size_t shifts,
                               std::size_t points) {
  const std::size_t d = chol.dim;
  const auto shift = draw_shifts(seed, shifts, d);
  const Lattice& lattice = lattice_for(points);
  std::vector<double> e(d);
  double sum = 0.0, sum2 = 0.0;
  for (std::size_t r = 0; r < shifts; ++r) {
    double acc = 0.0;
    for (std::size_t k = 0; k < points; ++k) {
      double w = 1.0;
      for (std::size_t i = 0; i < d && w > 0.0; ++i) {
        double m = 0.0;
        for (std::size_t l = 0; l < i; ++l) m += chol(i, l) * e[l];
        const double sd = chol(i, i);
        const double a = (lower[i] - m) / sd, b = (upper_bounds[i] - m) / sd;
        const double p = interval_prob(a, b);
        w *= p;
        if (i + 1 < d && p > 0.0) e[i] = truncated_draw(a, b, lattice.uniform(k, i, shift[i * shifts + r]));
      }
      acc += w;
    }
    acc /= static_cast<double>(points);
    sum += acc;
    sum2 += acc * acc;
  }
  const double ns = static_cast<double>(shifts);
  const double mean = sum / ns;
  const double var = std::max(0.0, (sum2 - ns * mean * mean) / (ns - 1.0));
  return {mean, 3.0 * std::sqrt(var / ns), points};
}

}  // namespace

namespace {

// Genz-Bretz prioritization: integrate first the variable whose conditional
// interval (given the expected values of those already chosen) is narrowest.
std::vector<std::size_t> integration_order(std::span<const double> lower, std::span<const double> upper_bounds,
                                           const matrix::SymMatrix& corr) {
  const std::size_t d = corr.dim();
  std::vector<double> cov(corr.data().begin(), corr.data().end());
  std::vector<double> mean(d, 0.0);
  std::vector<std::size_t> remaining(d), order;
  for (std::size_t i = 0; i < d; ++i) remaining[i] = i;
  while (!remaining.empty()) {
    std::size_t best = 0;
    double best_p = std::numeric_limits<double>::infinity(), best_a = 0.0, best_b = 0.0;
    for (std::size_t r = 0; r < remaining.size(); ++r) {
      const std::size_t j = remaining[r];
      const double sd = std::sqrt(std::max(cov[j * d + j], 1e-300));
      const double a = (lower[j] - mean[j]) / sd, b = (upper_bounds[j] - mean[j]) / sd;
      const double p = interval_prob(a, b);
      if (p < best_p) {
        best_p = p;
        best = r;
        best_a = a;
        best_b = b;
      }
    }
    const std::size_t j = remaining[best];
    remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(best));
    order.push_back(j);
    const double vjj = cov[j * d + j];
    if (!(vjj > 0.0) || !(best_p > 0.0)) continue;
    // Condition the rest on Z_j at its truncated mean.
    const double tmean = (pdf(best_a) - pdf(best_b)) / best_p;
    const double shift = std::sqrt(vjj) * tmean;
    for (std::size_t k : remaining) {
      mean[k] += cov[k * d + j] / vjj * shift;
      for (std::size_t l : remaining) cov[k * d + l] -= cov[k * d + j] * cov[l * d + j] / vjj;
    }
  }
  return order;
}

}  // namespace

RectangleResult mvn_rectangle(std::span<const double> lower, std::span<const double> upper_bounds,
                              const matrix::SymMatrix& corr, std::uint64_t seed, std::size_t shifts,
                              std::size_t points, double tolerance) {
  const std::size_t d = corr.dim();
  if (lower.size() != d || upper_bounds.size() != d) fail(ErrorCode::DimensionMismatch, "bounds and correlation differ in size");
  if (shifts < 2 || points < 1) fail(ErrorCode::InvalidSpec, "QMC needs >= 2 shifts and >= 1 point");
  for (std::size_t i = 0; i < d; ++i) {
    if (!(lower[i] < upper_bounds[i])) fail(ErrorCode::InvalidSpec, "lower bound must be below upper bound");
    if (std::fabs(corr(i, i) - 1.0) > 1e-9) fail(ErrorCode::InvalidSpec, "correlation diagonal must be 1");
  }
  if (d == 0) return {1.0, 0.0, 0};
  const auto order = integration_order(lower, upper_bounds, corr);
  std::vector<double> lo(d), hi(d);
  matrix::SymMatrix permuted(d);
  for (std::size_t i = 0; i < d; ++i) {
    lo[i] = lower[order[i]];
    hi[i] = upper_bounds[order[i]];
    for (std::size_t k = 0; k <= i; ++k) permuted.set(i, k, corr(order[i], order[k]));
  }
  const auto chol = matrix::chol_decompose(permuted);
  // Doubles the lattice until the error estimate meets the tolerance.
  for (;;) {
    const RectangleResult r = rectangle_once(lo, hi, chol, seed, shifts, points);
    if (r.error <= tolerance || points >= kMaxRectanglePoints) return r;
    points = std::min(kMaxRectanglePoints, points * 2);
  }
}

BoundarySchedule indinc_boundaries(std::span<const double> variances, const SpendingPlan& plan,
                                   std::size_t looks, std::size_t grid_points) {
  plan.validate();
  if (looks == 0) looks = variances.size();
  if (looks > variances.size() || looks > plan.looks()) fail(ErrorCode::DimensionMismatch, "more looks than variances or plan entries");
  IndincBoundarySolver solver(grid_points);
  BoundarySchedule out;
  out.method = Method::Indinc;
  for (std::size_t j = 0; j < looks; ++j) out.steps.push_back(solver.add_look(variances[j], plan.cumulative_alpha(j + 1)));
  return out;
}

BoundarySchedule mvn_boundaries(const matrix::SymMatrix& corr, const SpendingPlan& plan, std::size_t looks,
                                std::uint64_t seed, std::size_t shifts, std::size_t points) {
  plan.validate();
  if (looks == 0) looks = corr.dim();
  if (looks > corr.dim() || looks > plan.looks()) fail(ErrorCode::DimensionMismatch, "more looks than correlation rows or plan entries");
  MvnBoundarySolver solver(seed, shifts, points);
  BoundarySchedule out;
  out.method = Method::Mvn;
  out.seed = seed;
  for (std::size_t j = 0; j < looks; ++j) {
    std::vector<double> row(j + 1);
    for (std::size_t k = 0; k <= j; ++k) row[k] = corr(j, k);
    out.steps.push_back(solver.add_look(row, plan.cumulative_alpha(j + 1)));
  }
  return out;
}

matrix::SymMatrix correlation(const matrix::SymMatrix& cov) {
  const std::size_t k = cov.dim();
  matrix::SymMatrix out(k);
  for (std::size_t i = 0; i < k; ++i)
    if (!(cov(i, i) > 0.0)) fail(ErrorCode::NotPositiveDefinite, "covariance has a nonpositive diagonal entry");
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j <= i; ++j) out.set(i, j, i == j ? 1.0 : cov(i, j) / std::sqrt(cov(i, i) * cov(j, j)));
  return out;
}

bool has_independent_increments(const matrix::SymMatrix& cov, double tol) {
  const double scale = std::max(1.0, cov.max_abs_diagonal());
  for (std::size_t j = 0; j < cov.dim(); ++j)
    for (std::size_t k = j + 1; k < cov.dim(); ++k)
      if (std::fabs(cov(j, k) - cov(j, j)) > tol * scale) return false;
  return true;
}

}  // namespace seqcombine::boundaries

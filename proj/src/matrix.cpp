#include "matrix.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "error.hpp"

namespace seqcombine::matrix {

SymMatrix::SymMatrix(std::size_t dim, double fill) : dim_(dim), data_(dim * dim, fill) {}

SymMatrix SymMatrix::identity(std::size_t dim) {
  SymMatrix m(dim);
  for (std::size_t i = 0; i < dim; ++i) m.data_[i * dim + i] = 1.0;
  return m;
}

SymMatrix SymMatrix::from_rows(std::span<const double> rows, std::size_t dim) {
  if (dim == 0 || rows.size() != dim * dim) {
    fail(ErrorCode::DimensionMismatch, "matrix data is not square");
  }
  SymMatrix m(dim);
  std::copy(rows.begin(), rows.end(), m.data_.begin());
  for (std::size_t r = 0; r < dim; ++r) {
    for (std::size_t c = r + 1; c < dim; ++c) {
      const double a = m(r, c), b = m(c, r);
      const double scale = std::max({std::abs(a), std::abs(b), 1e-300});
      if (std::abs(a - b) > 1e-12 * scale) {
        std::ostringstream os;
        os << "matrix is not symmetric at (" << r + 1 << "," << c + 1 << ")";
        fail(ErrorCode::DimensionMismatch, os.str());
      }
      const double avg = 0.5 * (a + b);
      m.set(r, c, avg);
    }
  }
  return m;
}

void SymMatrix::set(std::size_t r, std::size_t c, double value) {
  data_[r * dim_ + c] = value;
  data_[c * dim_ + r] = value;
}

SymMatrix SymMatrix::leading(std::size_t j) const {
  SymMatrix m(j);
  for (std::size_t r = 0; r < j; ++r)
    for (std::size_t c = 0; c < j; ++c) m.data_[r * j + c] = (*this)(r, c);
  return m;
}

double SymMatrix::max_abs_diagonal() const {
  double best = 0.0;
  for (std::size_t i = 0; i < dim_; ++i) best = std::max(best, std::abs((*this)(i, i)));
  return best;
}

CholeskyFactor chol_decompose(const SymMatrix& m) {
  const std::size_t k = m.dim();
  CholeskyFactor f{k, std::vector<double>(k * k, 0.0)};
  const double tol = kPivotTolerance * m.max_abs_diagonal();
  for (std::size_t j = 0; j < k; ++j) {
    double pivot = m(j, j);
    for (std::size_t l = 0; l < j; ++l) pivot -= f.lower[j * k + l] * f.lower[j * k + l];
    if (!(pivot > tol)) {
      std::ostringstream os;
      os << "matrix is not positive definite (pivot " << pivot << " at row " << j + 1 << ")";
      fail(ErrorCode::NotPositiveDefinite, os.str());
    }
    const double d = std::sqrt(pivot);
    f.lower[j * k + j] = d;
    for (std::size_t i = j + 1; i < k; ++i) {
      double s = m(i, j);
      for (std::size_t l = 0; l < j; ++l) s -= f.lower[i * k + l] * f.lower[j * k + l];
      f.lower[i * k + j] = s / d;
    }
  }
  return f;
}

std::vector<double> chol_solve(const CholeskyFactor& f, std::span<const double> rhs) {
  const std::size_t k = f.dim;
  if (rhs.size() != k) fail(ErrorCode::DimensionMismatch, "right-hand side length mismatch");
  std::vector<double> x(rhs.begin(), rhs.end());
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t l = 0; l < i; ++l) x[i] -= f(i, l) * x[l];
    x[i] /= f(i, i);
  }
  for (std::size_t i = k; i-- > 0;) {
    for (std::size_t l = i + 1; l < k; ++l) x[i] -= f(l, i) * x[l];
    x[i] /= f(i, i);
  }
  return x;
}

SymMatrix spd_inverse(const SymMatrix& m) {
  const std::size_t k = m.dim();
  const CholeskyFactor f = chol_decompose(m);
  SymMatrix inv(k);
  std::vector<double> e(k, 0.0);
  for (std::size_t c = 0; c < k; ++c) {
    std::fill(e.begin(), e.end(), 0.0);
    e[c] = 1.0;
    const std::vector<double> col = chol_solve(f, e);
    for (std::size_t r = c; r < k; ++r) inv.set(r, c, col[r]);
  }
  return inv;
}

PaddedInverse::PaddedInverse(const SymMatrix& v, std::size_t active)
    : full_(v.dim()), active_(active) {
  if (active == 0 || active > v.dim()) {
    fail(ErrorCode::DimensionMismatch, "active block size outside [1, K]");
  }
  const SymMatrix block_inv = spd_inverse(v.leading(active));
  for (std::size_t r = 0; r < active; ++r)
    for (std::size_t c = 0; c <= r; ++c) full_.set(r, c, block_inv(r, c));
}

std::vector<double> PaddedInverse::apply(std::span<const double> x) const {
  return multiply(full_, x);
}

PaddedInverse padded_geninverse(const SymMatrix& v, std::size_t active) {
  return PaddedInverse(v, active);
}

std::vector<double> multiply(const SymMatrix& m, std::span<const double> x) {
  const std::size_t k = m.dim();
  if (x.size() != k) fail(ErrorCode::DimensionMismatch, "vector length does not match matrix");
  std::vector<double> y(k, 0.0);
  for (std::size_t r = 0; r < k; ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < k; ++c) s += m(r, c) * x[c];
    y[r] = s;
  }
  return y;
}

double bilinear_form(std::span<const double> u, const SymMatrix& m, std::span<const double> v) {
  const std::size_t k = m.dim();
  if (u.size() != k || v.size() != k) {
    fail(ErrorCode::DimensionMismatch, "vector length does not match matrix");
  }
  double s = 0.0;
  for (std::size_t r = 0; r < k; ++r) {
    if (u[r] == 0.0) continue;
    double row = 0.0;
    for (std::size_t c = 0; c < k; ++c) row += m(r, c) * v[c];
    s += u[r] * row;
  }
  return s;
}

double quad_form(std::span<const double> v, const SymMatrix& m) {
  return bilinear_form(v, m, v);
}

}  // namespace seqcombine::matrix

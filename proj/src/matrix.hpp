#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace seqcombine::matrix {

// Dense symmetric K x K matrix, row-major full storage. K is small (<= 10)
// everywhere in this library; nothing here is tuned for large sizes.
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(std::size_t dim, double fill = 0.0);

  static SymMatrix identity(std::size_t dim);
  // Builds from a row-major square array; throws DimensionMismatch if the
  // length is not a square or the entries are not symmetric to 1e-12 relative.
  static SymMatrix from_rows(std::span<const double> rows, std::size_t dim);

  std::size_t dim() const noexcept { return dim_; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * dim_ + c]; }
  // Writes both (r, c) and (c, r).
  void set(std::size_t r, std::size_t c, double value);

  // Upper-left block of size j.
  SymMatrix leading(std::size_t j) const;
  double max_abs_diagonal() const;

  std::span<const double> data() const noexcept { return data_; }

  friend bool operator==(const SymMatrix&, const SymMatrix&) = default;

 private:
  std::size_t dim_ = 0;
  std::vector<double> data_;
};

// Lower-triangular factor, row-major, zeros above the diagonal.
struct CholeskyFactor {
  std::size_t dim = 0;
  std::vector<double> lower;

  double operator()(std::size_t r, std::size_t c) const { return lower[r * dim + c]; }
};

// Pivot tolerance relative to the largest diagonal entry.
inline constexpr double kPivotTolerance = 1e-12;

CholeskyFactor chol_decompose(const SymMatrix& m);

// Solves M x = rhs given the Cholesky factor of M.
std::vector<double> chol_solve(const CholeskyFactor& factor, std::span<const double> rhs);

SymMatrix spd_inverse(const SymMatrix& m);

// V_j^-: inverse of the leading j x j block of v, embedded in a zero K x K matrix.
class PaddedInverse {
 public:
  PaddedInverse(const SymMatrix& v, std::size_t active);

  std::size_t dim() const noexcept { return full_.dim(); }
  std::size_t active() const noexcept { return active_; }
  const SymMatrix& matrix() const noexcept { return full_; }
  double operator()(std::size_t r, std::size_t c) const { return full_(r, c); }

  // Product V_j^- x over the full length-K vector.
  std::vector<double> apply(std::span<const double> x) const;

 private:
  SymMatrix full_;
  std::size_t active_;
};

PaddedInverse padded_geninverse(const SymMatrix& v, std::size_t active);

double quad_form(std::span<const double> v, const SymMatrix& m);
double bilinear_form(std::span<const double> u, const SymMatrix& m, std::span<const double> v);
std::vector<double> multiply(const SymMatrix& m, std::span<const double> x);

}  // namespace seqcombine::matrix

#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace ringd::linalg {

using Vector = std::vector<double>;

// Dense row-major matrix.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix identity(std::size_t n);
  static Matrix from_columns(std::span<const Vector> columns);
  static Matrix from_rows(std::span<const Vector> rows);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

  Vector row(std::size_t r) const;
  Vector column(std::size_t c) const;
  void set_column(std::size_t c, std::span<const double> values);

  Matrix transpose() const;
  std::span<const double> data() const noexcept { return data_; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix operator*(const Matrix& a, const Matrix& b);
Vector operator*(const Matrix& a, std::span<const double> x);
Matrix operator-(const Matrix& a, const Matrix& b);

double frobenius_norm(const Matrix& a);
double max_abs(const Matrix& a);
double norm2(std::span<const double> x);
double dot(std::span<const double> a, std::span<const double> b);

// Thin SVD A = U * diag(w[0..k)) * V[:, 0..k)^T with k = min(rows, cols).
// U is rows x k with orthonormal columns; V is a full cols x cols orthogonal
// matrix; w has `cols` entries sorted descending, entries k.. are zero and
// belong to the null-space columns of V.
struct Svd {
  Matrix u;
  Vector w;
  Matrix v;
};

// One-sided Jacobi. Throws ConvergenceFailure if the sweeps do not settle,
// InvalidArgument on non-finite input.
Svd svd(const Matrix& a);

struct LeastSquares {
  Vector x;
  double residual_norm = 0.0;
};

// Householder-QR solution of min ||A x - b|| for rows >= cols. Throws
// SingularFit when A is numerically rank deficient.
LeastSquares least_squares(const Matrix& a, std::span<const double> b);

}  // namespace ringd::linalg

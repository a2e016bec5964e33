#include "common/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "common/error.hpp"

namespace ringd::linalg {

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::from_columns(std::span<const Vector> columns) {
  if (columns.empty()) return {};
  Matrix m(columns.front().size(), columns.size());
  for (std::size_t c = 0; c < columns.size(); ++c) {
    if (columns[c].size() != m.rows()) throw Error(ErrorCode::ShapeMismatch, "ragged columns");
    m.set_column(c, columns[c]);
  }
  return m;
}

Matrix Matrix::from_rows(std::span<const Vector> rows) {
  if (rows.empty()) return {};
  Matrix m(rows.size(), rows.front().size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != m.cols()) throw Error(ErrorCode::ShapeMismatch, "ragged rows");
    std::copy(rows[r].begin(), rows[r].end(), m.data_.begin() + static_cast<std::ptrdiff_t>(r * m.cols_));
  }
  return m;
}

Vector Matrix::row(std::size_t r) const {
  auto first = data_.begin() + static_cast<std::ptrdiff_t>(r * cols_);
  return Vector(first, first + static_cast<std::ptrdiff_t>(cols_));
}

Vector Matrix::column(std::size_t c) const {
  Vector out(rows_);
  for (std::size_t r = 0; r < rows_; ++r) out[r] = (*this)(r, c);
  return out;
}

void Matrix::set_column(std::size_t c, std::span<const double> values) {
  for (std::size_t r = 0; r < rows_; ++r) (*this)(r, c) = values[r];
}

Matrix Matrix::transpose() const {
  Matrix t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  return t;
}

Matrix operator*(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw Error(ErrorCode::ShapeMismatch, "matrix product shape");
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += aik * b(k, j);
    }
  return out;
}

Vector operator*(const Matrix& a, std::span<const double> x) {
  if (a.cols() != x.size()) throw Error(ErrorCode::ShapeMismatch, "matrix-vector shape");
  Vector out(a.rows(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * x[k];
    out[i] = s;
  }
  return out;
}

Matrix operator-(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw Error(ErrorCode::ShapeMismatch, "matrix difference shape");
  Matrix out(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out(i, j) = a(i, j) - b(i, j);
  return out;
}

double frobenius_norm(const Matrix& a) {
  double s = 0.0;
  for (double x : a.data()) s += x * x;
  return std::sqrt(s);
}

double max_abs(const Matrix& a) {
  double m = 0.0;
  for (double x : a.data()) m = std::max(m, std::abs(x));
  return m;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> x) { return std::sqrt(dot(x, x)); }

namespace {

// Columns of `q` [0, filled) are orthonormal; append unit vectors until the
// matrix is square-complete. Used for null-space bases.
void complete_orthonormal(Matrix& q, std::size_t filled) {
  const std::size_t n = q.rows();
  std::size_t next = filled;
  for (std::size_t e = 0; e < n && next < q.cols(); ++e) {
    Vector cand(n, 0.0);
    cand[e] = 1.0;
    for (int pass = 0; pass < 2; ++pass)
      for (std::size_t c = 0; c < next; ++c) {
        double proj = 0.0;
        for (std::size_t r = 0; r < n; ++r) proj += q(r, c) * cand[r];
        for (std::size_t r = 0; r < n; ++r) cand[r] -= proj * q(r, c);
      }
    const double nrm = norm2(cand);
    if (nrm < 1e-6) continue;
    for (std::size_t r = 0; r < n; ++r) q(r, next) = cand[r] / nrm;
    ++next;
  }
  if (next != q.cols()) throw Error(ErrorCode::ConvergenceFailure, "basis completion failed");
}

// Tall case (rows >= cols): B V = U diag(w).
Svd jacobi_tall(const Matrix& b) {
  const std::size_t m = b.rows();
  const std::size_t n = b.cols();
  Matrix u = b;
  Matrix v = Matrix::identity(n);
  constexpr double eps = std::numeric_limits<double>::epsilon();
  constexpr int max_sweeps = 80;

  bool converged = false;
  for (int sweep = 0; sweep < max_sweeps && !converged; ++sweep) {
    converged = true;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        double alpha = 0.0, beta = 0.0, gamma = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
          const double up = u(i, p), uq = u(i, q);
          alpha += up * up;
          beta += uq * uq;
          gamma += up * uq;
        }
        if (gamma == 0.0 || std::abs(gamma) <= eps * std::sqrt(alpha * beta)) continue;
        converged = false;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (std::size_t i = 0; i < m; ++i) {
          const double up = u(i, p), uq = u(i, q);
          u(i, p) = c * up - s * uq;
          u(i, q) = s * up + c * uq;
        }
        for (std::size_t i = 0; i < n; ++i) {
          const double vp = v(i, p), vq = v(i, q);
          v(i, p) = c * vp - s * vq;
          v(i, q) = s * vp + c * vq;
        }
      }
    }
  }
  if (!converged) throw Error(ErrorCode::ConvergenceFailure, "Jacobi SVD did not converge");

  Vector w(n);
  for (std::size_t j = 0; j < n; ++j) w[j] = norm2(u.column(j));

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return w[a] > w[b]; });

  Svd out{Matrix(m, n), Vector(n), Matrix(n, n)};
  const double wmax = n ? w[order[0]] : 0.0;
  const double tiny = wmax * eps * static_cast<double>(std::max(m, n));
  std::size_t good = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t j = order[k];
    out.w[k] = w[j];
    for (std::size_t i = 0; i < n; ++i) out.v(i, k) = v(i, j);
    if (w[j] > tiny && w[j] > 0.0) {
      for (std::size_t i = 0; i < m; ++i) out.u(i, k) = u(i, j) / w[j];
      ++good;
    }
  }
  // Left vectors of (numerically) zero singular values are arbitrary; pick an
  // orthonormal completion so U^T U = I holds.
  if (good < n) {
    Matrix full(m, m);
    for (std::size_t k = 0; k < good; ++k)
      for (std::size_t i = 0; i < m; ++i) full(i, k) = out.u(i, k);
    complete_orthonormal(full, good);
    for (std::size_t k = good; k < n; ++k)
      for (std::size_t i = 0; i < m; ++i) out.u(i, k) = full(i, k);
  }
  return out;
}

}  // namespace

Svd svd(const Matrix& a) {
  for (double x : a.data())
    if (!std::isfinite(x)) throw Error(ErrorCode::InvalidArgument, "SVD of non-finite matrix");
  if (a.rows() >= a.cols()) return jacobi_tall(a);

  // Wide: factor A^T = U' W V'^T, so A = V' W U'^T.
  const std::size_t m = a.rows();
  const std::size_t n = a.cols();
  Svd t = jacobi_tall(a.transpose());  // u: n x m, v: m x m, w: m
  Svd out{t.v, Vector(n, 0.0), Matrix(n, n)};
  for (std::size_t k = 0; k < m; ++k) {
    out.w[k] = t.w[k];
    for (std::size_t i = 0; i < n; ++i) out.v(i, k) = t.u(i, k);
  }
  complete_orthonormal(out.v, m);
  return out;
}

LeastSquares least_squares(const Matrix& a, std::span<const double> b) {
  const std::size_t m = a.rows();
  const std::size_t n = a.cols();
  if (b.size() != m) throw Error(ErrorCode::ShapeMismatch, "least squares rhs length");
  if (m < n) throw Error(ErrorCode::SingularFit, "underdetermined least squares");

  Matrix r = a;
  Vector y(b.begin(), b.end());
  Vector col_norm(n);
  for (std::size_t j = 0; j < n; ++j) col_norm[j] = norm2(a.column(j));

  for (std::size_t k = 0; k < n; ++k) {
    double alpha = 0.0;
    for (std::size_t i = k; i < m; ++i) alpha += r(i, k) * r(i, k);
    alpha = std::sqrt(alpha);
    if (alpha <= 1e-12 * std::max(col_norm[k], std::numeric_limits<double>::min()) || alpha == 0.0)
      throw Error(ErrorCode::SingularFit, "rank-deficient least squares");
    if (r(k, k) > 0) alpha = -alpha;
    Vector v(m - k);
    for (std::size_t i = k; i < m; ++i) v[i - k] = r(i, k);
    v[0] -= alpha;
    const double vnorm2 = dot(v, v);
    if (vnorm2 == 0.0) continue;
    for (std::size_t j = k; j < n; ++j) {
      double s = 0.0;
      for (std::size_t i = k; i < m; ++i) s += v[i - k] * r(i, j);
      s = 2.0 * s / vnorm2;
      for (std::size_t i = k; i < m; ++i) r(i, j) -= s * v[i - k];
    }
    double s = 0.0;
    for (std::size_t i = k; i < m; ++i) s += v[i - k] * y[i];
    s = 2.0 * s / vnorm2;
    for (std::size_t i = k; i < m; ++i) y[i] -= s * v[i - k];
  }

  LeastSquares out{Vector(n, 0.0), 0.0};
  for (std::size_t k = n; k-- > 0;) {
    double s = y[k];
    for (std::size_t j = k + 1; j < n; ++j) s -= r(k, j) * out.x[j];
    out.x[k] = s / r(k, k);
  }
  double res = 0.0;
  for (std::size_t i = n; i < m; ++i) res += y[i] * y[i];
  out.residual_norm = std::sqrt(res);
  return out;
}

}  // namespace ringd::linalg

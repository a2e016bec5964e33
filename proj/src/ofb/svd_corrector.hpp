#pragma once

#include <vector>

#include "common/linalg.hpp"

namespace ringd::ofb {

using linalg::Matrix;
using linalg::Vector;

// SVD orbit corrector for a response matrix R (BPMs x correctors). Columns
// may carry weights W so the factorization is of R*W; the returned
// correction is always in the units of R's columns.
//
//   c = -W * V * diag(mask_i / w_i) * U^T * (orbit - reference)
//
// Singular values below kCutoff * w_max are dropped even when enabled.
class SvdCorrector {
 public:
  static constexpr double kCutoff = 1e-10;

  explicit SvdCorrector(const Matrix& response, Vector column_weights = {});

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  // `cols` entries, descending; entries past min(rows, cols) are zero.
  const Vector& singular_values() const noexcept { return svd_.w; }
  const Matrix& u() const noexcept { return svd_.u; }
  const Matrix& v() const noexcept { return svd_.v; }
  const Vector& column_weights() const noexcept { return weights_; }

  // One flag per singular value (length cols). Throws BadMask.
  void set_mask(const std::vector<bool>& mask);
  void set_mask(const Vector& mask);  // entries must be 0 or 1
  const std::vector<bool>& mask() const noexcept { return mask_; }
  // Mask actually used: the manual mask and the auto cutoff.
  std::vector<bool> effective_mask() const;
  std::size_t enabled_count() const;

  void set_reference(const Vector& reference);  // ShapeMismatch
  const Vector& reference() const noexcept { return reference_; }

  // Throws ShapeMismatch on a wrong orbit length, AllDisabled when nothing
  // is enabled.
  Vector compute_correction(const Vector& orbit) const;

  // The operator P with c = -P * (orbit - reference).
  Matrix pseudo_inverse() const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  Vector weights_;
  linalg::Svd svd_;
  std::vector<bool> mask_;
  Vector reference_;
};

// Nearest frequency reachable from `applied` in whole steps, with
// round-half-away-from-zero; inside +-step/2 nothing moves. The result is
// an integer multiple of `step`.
double quantize_frequency(double target, double applied, double step);

}  // namespace ringd::ofb

#include "ofb/svd_corrector.hpp"

#include <algorithm>
#include <cmath>

#include "common/error.hpp"

namespace ringd::ofb {

SvdCorrector::SvdCorrector(const Matrix& response, Vector column_weights)
    : rows_(response.rows()), cols_(response.cols()), weights_(std::move(column_weights)) {
  if (rows_ == 0 || cols_ == 0) throw Error(ErrorCode::ShapeMismatch, "empty response matrix");
  if (weights_.empty()) weights_.assign(cols_, 1.0);
  if (weights_.size() != cols_) throw Error(ErrorCode::ShapeMismatch, "one weight per response column");
  for (double w : weights_)
    if (!(w > 0.0) || !std::isfinite(w)) throw Error(ErrorCode::InvalidArgument, "column weights must be > 0");

  Matrix scaled = response;
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) scaled(r, c) *= weights_[c];
  svd_ = linalg::svd(scaled);
  mask_.assign(cols_, true);
  reference_.assign(rows_, 0.0);
}

void SvdCorrector::set_mask(const std::vector<bool>& mask) {
  if (mask.size() != cols_)
    throw Error(ErrorCode::BadMask, "mask needs " + std::to_string(cols_) + " entries, got " +
                                        std::to_string(mask.size()));
  mask_ = mask;
}

void SvdCorrector::set_mask(const Vector& mask) {
  std::vector<bool> flags(mask.size());
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i] != 0.0 && mask[i] != 1.0) throw Error(ErrorCode::BadMask, "mask entries must be 0 or 1");
    flags[i] = mask[i] == 1.0;
  }
  set_mask(flags);
}

std::vector<bool> SvdCorrector::effective_mask() const {
  const double w_max = svd_.w.empty() ? 0.0 : svd_.w.front();
  std::vector<bool> m(cols_);
  for (std::size_t i = 0; i < cols_; ++i) m[i] = mask_[i] && svd_.w[i] > 0.0 && svd_.w[i] >= kCutoff * w_max;
  return m;
}

std::size_t SvdCorrector::enabled_count() const {
  const auto m = effective_mask();
  return static_cast<std::size_t>(std::count(m.begin(), m.end(), true));
}

void SvdCorrector::set_reference(const Vector& reference) {
  if (reference.size() != rows_) throw Error(ErrorCode::ShapeMismatch, "reference orbit has the wrong length");
  reference_ = reference;
}

Vector SvdCorrector::compute_correction(const Vector& orbit) const {
  if (orbit.size() != rows_) throw Error(ErrorCode::ShapeMismatch, "orbit has the wrong length");
  const auto m = effective_mask();
  if (std::none_of(m.begin(), m.end(), [](bool b) { return b; }))
    throw Error(ErrorCode::AllDisabled, "every singular value is disabled");

  const std::size_t k = svd_.u.cols();
  Vector coeff(k, 0.0);
  for (std::size_t i = 0; i < k; ++i) {
    if (!m[i]) continue;
    double s = 0.0;
    for (std::size_t r = 0; r < rows_; ++r) s += svd_.u(r, i) * (orbit[r] - reference_[r]);
    coeff[i] = s / svd_.w[i];
  }
  Vector c(cols_, 0.0);
  for (std::size_t j = 0; j < cols_; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < k; ++i) s += svd_.v(j, i) * coeff[i];
    c[j] = -weights_[j] * s;
  }
  return c;
}

Matrix SvdCorrector::pseudo_inverse() const {
  const auto m = effective_mask();
  const std::size_t k = svd_.u.cols();
  Matrix p(cols_, rows_);
  for (std::size_t i = 0; i < k; ++i) {
    if (!m[i]) continue;
    const double inv = 1.0 / svd_.w[i];
    for (std::size_t j = 0; j < cols_; ++j) {
      const double vj = weights_[j] * svd_.v(j, i) * inv;
      for (std::size_t r = 0; r < rows_; ++r) p(j, r) += vj * svd_.u(r, i);
    }
  }
  return p;
}

double quantize_frequency(double target, double applied, double step) {
  if (!(step > 0.0)) throw Error(ErrorCode::InvalidArgument, "frequency step must be > 0");
  const double base = std::round(applied / step);
  const double moves = std::round((target - applied) / step);
  return (base + moves) * step + 0.0;  // no negative zero
}

}  // namespace ringd::ofb

#include "ring/lattice.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "common/error.hpp"

namespace ringd::ring {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr int kSuperperiods = 12;

double beta_x_at(const RingConfig& c, double s) {
  if (c.uniform_beta) return 10.0;
  return 10.5 - 9.5 * std::cos(2 * kPi * kSuperperiods * s);
}

double beta_y_at(const RingConfig& c, double s) {
  if (c.uniform_beta) return 10.0;
  return 10.5 + 9.5 * std::cos(2 * kPi * kSuperperiods * s + 0.7);
}

double eta_at(double s) { return 0.05 + 0.075 * (1.0 - std::cos(2 * kPi * kSuperperiods * s)); }

double bpm_position(const RingConfig& c, std::size_t i) {
  return (static_cast<double>(i) + 0.25) / static_cast<double>(c.n_bpm);
}

double corrector_position(const RingConfig& c, std::size_t j) {
  const double offset = c.colocated ? 0.25 : 0.5;
  return (static_cast<double>(j) + offset) / static_cast<double>(c.n_corr);
}

Matrix plane_response(const RingConfig& c, double nu, double (*beta)(const RingConfig&, double)) {
  Matrix r(c.n_bpm, c.n_corr);
  for (std::size_t i = 0; i < c.n_bpm; ++i) {
    const double si = bpm_position(c, i);
    for (std::size_t j = 0; j < c.n_corr; ++j) {
      const double sj = corrector_position(c, j);
      r(i, j) = closed_orbit_element(beta(c, si), beta(c, sj), 2 * kPi * nu * si, 2 * kPi * nu * sj, nu);
    }
  }
  return r;
}

}  // namespace

double closed_orbit_element(double beta_i, double beta_j, double phi_i, double phi_j, double nu) {
  const double s = std::sin(kPi * nu);
  if (std::abs(s) < 1e-9) throw Error(ErrorCode::DegenerateTune, "integer tune: closed orbit undefined");
  return std::sqrt(beta_i * beta_j) * std::cos(kPi * nu - std::abs(phi_i - phi_j)) / (2.0 * s);
}

Vector ResponseModel::frequency_column() const {
  Vector col(eta.size());
  for (std::size_t i = 0; i < eta.size(); ++i) col[i] = -1000.0 * eta[i] / (alpha_c * f0);
  return col;
}

Matrix ResponseModel::extended_x() const {
  Matrix ext(r_x.rows(), r_x.cols() + 1);
  for (std::size_t i = 0; i < r_x.rows(); ++i)
    for (std::size_t j = 0; j < r_x.cols(); ++j) ext(i, j) = r_x(i, j);
  ext.set_column(r_x.cols(), frequency_column());
  return ext;
}

ResponseModel derive_response(const RingConfig& config) {
  validate(config);
  ResponseModel m;
  m.r_x = plane_response(config, config.nu_x, beta_x_at);
  m.r_y = plane_response(config, config.nu_y, beta_y_at);
  m.eta.resize(config.n_bpm);
  for (std::size_t i = 0; i < config.n_bpm; ++i) m.eta[i] = eta_at(bpm_position(config, i));
  m.alpha_c = config.alpha_c;
  m.f0 = config.f0;
  return m;
}

MagnetModel derive_magnets(const RingConfig& config) {
  validate(config);
  std::mt19937_64 rng(config.seed ^ 0x6d61676e6574ULL);
  std::uniform_real_distribution<double> jitter(-1.0, 1.0);

  MagnetModel m;
  const auto nq = config.n_quad;
  const auto ns = config.n_sext;
  m.i_quad_nom.resize(nq);
  m.g_tune = Matrix(2, nq);
  for (std::size_t k = 0; k < nq; ++k) {
    const double s = (static_cast<double>(k) + 0.5) / static_cast<double>(nq);
    const double sign = (k % 2 == 0) ? 1.0 : -1.0;
    m.i_quad_nom[k] = 90.0 + 30.0 * std::sin(2 * kPi * 3 * s) + 5.0 * jitter(rng);
    m.g_tune(0, k) = sign * beta_x_at(config, s) * 2e-3 / (4 * kPi) * (sign > 0 ? 1.2 : 0.8);
    m.g_tune(1, k) = -sign * beta_y_at(config, s) * 2e-3 / (4 * kPi) * (sign > 0 ? 0.8 : 1.2);
  }
  m.i_sext_nom.resize(ns);
  m.g_chrom = Matrix(2, ns);
  for (std::size_t k = 0; k < ns; ++k) {
    const double s = (static_cast<double>(k) + 0.5) / static_cast<double>(ns);
    const double sign = (k % 2 == 0) ? 1.0 : -1.0;
    m.i_sext_nom[k] = 60.0 + 20.0 * std::cos(2 * kPi * 2 * s) + 3.0 * jitter(rng);
    m.g_chrom(0, k) = sign * beta_x_at(config, s) * eta_at(s) * 0.05 * (sign > 0 ? 1.3 : 0.7);
    m.g_chrom(1, k) = -sign * beta_y_at(config, s) * eta_at(s) * 0.05 * (sign > 0 ? 0.7 : 1.3);
  }
  m.i_bend_nom.assign(config.n_bend, 480.0);
  return m;
}

}  // namespace ringd::ring

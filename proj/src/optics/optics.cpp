#include "optics/optics.hpp"

#include <cmath>

#include "common/error.hpp"

namespace ringd::optics {

void AdjustmentParams::validate() const {
  for (double v : {d_nu_x, d_nu_y, d_xi_x, d_xi_y, s_sext, s_energy})
    if (!std::isfinite(v)) throw Error(ErrorCode::InvalidArgument, "adjustment parameters must be finite");
  if (!(s_energy > 0.0)) throw Error(ErrorCode::InvalidArgument, "s_energy must be > 0");
  if (!(s_sext >= 0.0)) throw Error(ErrorCode::InvalidArgument, "s_sext must be >= 0");
}

void set_param(AdjustmentParams& p, std::string_view key, double value) {
  if (key == "d_nu_x") p.d_nu_x = value;
  else if (key == "d_nu_y") p.d_nu_y = value;
  else if (key == "d_xi_x") p.d_xi_x = value;
  else if (key == "d_xi_y") p.d_xi_y = value;
  else if (key == "s_sext") p.s_sext = value;
  else if (key == "s_energy") p.s_energy = value;
  else throw Error(ErrorCode::InvalidArgument, "unknown optics parameter '" + std::string(key) + "'");
}

namespace {

void require_rank2(const Matrix& m, const char* what) {
  const Vector c0 = m.column(0), c1 = m.column(1);
  const double a = linalg::dot(c0, c0), b = linalg::dot(c1, c1), c = linalg::dot(c0, c1);
  // Gram determinant relative to the column norms: sin^2 of the angle.
  if (!(a > 0.0 && b > 0.0) || (a * b - c * c) <= 1e-12 * a * b)
    throw Error(ErrorCode::RankDeficient, std::string(what) + " does not have rank 2");
}

void require_identity(const Matrix& g, const Matrix& m, double tol, const char* what) {
  if (g.rows() != 2 || g.cols() != m.rows())
    throw Error(ErrorCode::ShapeMismatch, std::string(what) + " forward map has the wrong shape");
  const Matrix p = g * m;
  for (std::size_t r = 0; r < 2; ++r)
    for (std::size_t c = 0; c < 2; ++c)
      if (std::abs(p(r, c) - (r == c ? 1.0 : 0.0)) > tol)
        throw Error(ErrorCode::InvalidArgument, std::string(what) + " matrix is inconsistent with the machine map");
}

Matrix right_inverse(const Matrix& g) {
  // G^T (G G^T)^-1 for a 2 x n matrix of rank 2.
  const Matrix gg = g * g.transpose();
  const double det = gg(0, 0) * gg(1, 1) - gg(0, 1) * gg(1, 0);
  if (!(std::abs(det) > 0.0)) throw Error(ErrorCode::RankDeficient, "forward map is rank deficient");
  Matrix inv(2, 2);
  inv(0, 0) = gg(1, 1) / det;
  inv(0, 1) = -gg(0, 1) / det;
  inv(1, 0) = -gg(1, 0) / det;
  inv(1, 1) = gg(0, 0) / det;
  return g.transpose() * inv;
}

void require_length(const Vector& v, std::size_t n, const char* what) {
  if (v.size() != n)
    throw Error(ErrorCode::ShapeMismatch, std::string(what) + ": expected " + std::to_string(n) + " values, got " +
                                              std::to_string(v.size()));
}

}  // namespace

void OpticsSetup::check(double tol) const {
  if (i_quad_nom.empty() || i_sext_nom.empty() || i_bend_nom.empty())
    throw Error(ErrorCode::ShapeMismatch, "optics has an empty magnet family");
  if (m_tune.rows() != i_quad_nom.size() || m_tune.cols() != 2)
    throw Error(ErrorCode::ShapeMismatch, "tune matrix must be n_quad x 2");
  if (m_chrom.rows() != i_sext_nom.size() || m_chrom.cols() != 2)
    throw Error(ErrorCode::ShapeMismatch, "chromaticity matrix must be n_sext x 2");
  require_rank2(m_tune, "tune matrix");
  require_rank2(m_chrom, "chromaticity matrix");
  if (g_tune) require_identity(*g_tune, m_tune, tol, "tune");
  if (g_chrom) require_identity(*g_chrom, m_chrom, tol, "chromaticity");
}

MagnetCurrents compute_currents(const OpticsSetup& setup, const AdjustmentParams& p) {
  p.validate();
  if (setup.m_tune.rows() != setup.i_quad_nom.size() || setup.m_chrom.rows() != setup.i_sext_nom.size() ||
      setup.m_tune.cols() != 2 || setup.m_chrom.cols() != 2)
    throw Error(ErrorCode::ShapeMismatch, "optics setup shapes are inconsistent");

  MagnetCurrents out;
  const double dnu[2] = {p.d_nu_x, p.d_nu_y};
  const double dxi[2] = {p.d_xi_x, p.d_xi_y};
  const Vector q = setup.m_tune * dnu;
  const Vector s = setup.m_chrom * dxi;
  // The energy factor is applied last so that scaling it is exact.
  out.quad.resize(q.size());
  for (std::size_t k = 0; k < q.size(); ++k) out.quad[k] = p.s_energy * (setup.i_quad_nom[k] + q[k]);
  out.sext.resize(s.size());
  for (std::size_t k = 0; k < s.size(); ++k) out.sext[k] = p.s_energy * (p.s_sext * (setup.i_sext_nom[k] + s[k]));
  out.bend.resize(setup.i_bend_nom.size());
  for (std::size_t k = 0; k < out.bend.size(); ++k) out.bend[k] = p.s_energy * setup.i_bend_nom[k];
  return out;
}

InferredParams infer_params(const OpticsSetup& setup, const Vector& quad, const Vector& sext, const Vector& bend) {
  require_length(quad, setup.i_quad_nom.size(), "quadrupole currents");
  require_length(sext, setup.i_sext_nom.size(), "sextupole currents");
  require_length(bend, setup.i_bend_nom.size(), "dipole currents");

  InferredParams out;
  auto& p = out.params;

  double sum_bend = 0.0, sum_nom = 0.0;
  for (std::size_t k = 0; k < bend.size(); ++k) {
    sum_bend += bend[k];
    sum_nom += setup.i_bend_nom[k];
  }
  if (sum_nom == 0.0) throw Error(ErrorCode::SingularFit, "nominal dipole currents average to zero");
  p.s_energy = sum_bend / sum_nom;
  if (!(p.s_energy > 0.0)) throw Error(ErrorCode::SingularFit, "dipole currents give a non-positive energy scale");
  {
    Vector r(bend.size());
    for (std::size_t k = 0; k < bend.size(); ++k) r[k] = bend[k] - p.s_energy * setup.i_bend_nom[k];
    out.bend_residual = linalg::norm2(r);
  }

  Vector y(quad.size());
  for (std::size_t k = 0; k < quad.size(); ++k) y[k] = quad[k] / p.s_energy - setup.i_quad_nom[k];
  const auto tune = linalg::least_squares(setup.m_tune, y);
  p.d_nu_x = tune.x[0];
  p.d_nu_y = tune.x[1];
  out.quad_residual = tune.residual_norm * p.s_energy;

  // sext / s_energy = s_sext * nom + (s_sext * dxi) . M
  const std::size_t ns = sext.size();
  Matrix a(ns, 3);
  Vector z(ns);
  for (std::size_t k = 0; k < ns; ++k) {
    a(k, 0) = setup.i_sext_nom[k];
    a(k, 1) = setup.m_chrom(k, 0);
    a(k, 2) = setup.m_chrom(k, 1);
    z[k] = sext[k] / p.s_energy;
  }
  const auto chrom = linalg::least_squares(a, z);
  p.s_sext = chrom.x[0];
  if (std::abs(p.s_sext) > 1e-12) {
    p.d_xi_x = chrom.x[1] / p.s_sext;
    p.d_xi_y = chrom.x[2] / p.s_sext;
  }
  out.sext_residual = chrom.residual_norm * p.s_energy;
  return out;
}

OpticsSetup generate_optics(const ring::MagnetModel& magnets, std::string name) {
  OpticsSetup s;
  s.name = std::move(name);
  s.i_quad_nom = magnets.i_quad_nom;
  s.i_sext_nom = magnets.i_sext_nom;
  s.i_bend_nom = magnets.i_bend_nom;
  s.m_tune = right_inverse(magnets.g_tune);
  s.m_chrom = right_inverse(magnets.g_chrom);
  s.g_tune = magnets.g_tune;
  s.g_chrom = magnets.g_chrom;
  s.check();
  return s;
}

Snapshot optics_to_snapshot(const OpticsSetup& setup) {
  namespace f = optics_file;
  Snapshot snap;
  snap.time = iso8601_utc(wall_clock_now());
  snap.optics = setup.name;
  snap.add(f::kQuadNom, setup.i_quad_nom);
  snap.add(f::kTuneCol0, setup.m_tune.column(0));
  snap.add(f::kTuneCol1, setup.m_tune.column(1));
  snap.add(f::kSextNom, setup.i_sext_nom);
  snap.add(f::kChromCol0, setup.m_chrom.column(0));
  snap.add(f::kChromCol1, setup.m_chrom.column(1));
  snap.add(f::kBendNom, setup.i_bend_nom);
  if (setup.g_tune) {
    snap.add(f::kTuneRow0, setup.g_tune->row(0));
    snap.add(f::kTuneRow1, setup.g_tune->row(1));
  }
  if (setup.g_chrom) {
    snap.add(f::kChromRow0, setup.g_chrom->row(0));
    snap.add(f::kChromRow1, setup.g_chrom->row(1));
  }
  return snap;
}

OpticsSetup optics_from_snapshot(const Snapshot& snap) {
  namespace f = optics_file;
  OpticsSetup s;
  s.name = snap.optics;
  s.i_quad_nom = snap.numbers(f::kQuadNom);
  s.i_sext_nom = snap.numbers(f::kSextNom);
  s.i_bend_nom = snap.numbers(f::kBendNom);

  auto columns = [&](const char* c0, const char* c1, std::size_t n, const char* what) {
    const Vector cols[2] = {snap.numbers(c0), snap.numbers(c1)};
    for (const auto& c : cols) require_length(c, n, what);
    return Matrix::from_columns(cols);
  };
  auto rows = [&](const char* r0, const char* r1, std::size_t n, const char* what) -> std::optional<Matrix> {
    if (!snap.find(r0) && !snap.find(r1)) return std::nullopt;
    const Vector rs[2] = {snap.numbers(r0), snap.numbers(r1)};
    for (const auto& r : rs) require_length(r, n, what);
    return Matrix::from_rows(rs);
  };
  s.m_tune = columns(f::kTuneCol0, f::kTuneCol1, s.i_quad_nom.size(), "tune matrix column");
  s.m_chrom = columns(f::kChromCol0, f::kChromCol1, s.i_sext_nom.size(), "chromaticity matrix column");
  s.g_tune = rows(f::kTuneRow0, f::kTuneRow1, s.i_quad_nom.size(), "tune forward map row");
  s.g_chrom = rows(f::kChromRow0, f::kChromRow1, s.i_sext_nom.size(), "chromaticity forward map row");
  s.check();
  return s;
}

OpticsSetup load_optics(const std::string& path) { return optics_from_snapshot(read_snapshot(path)); }

void write_optics(const std::string& path, const OpticsSetup& setup) {
  write_snapshot(path, optics_to_snapshot(setup));
}

}  // namespace ringd::optics

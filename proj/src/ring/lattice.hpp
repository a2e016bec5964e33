#pragma once

#include "common/linalg.hpp"
#include "ring/config.hpp"

namespace ringd::ring {

using linalg::Matrix;
using linalg::Vector;

// Orbit response of the ring: BPM x corrector matrices per plane plus the
// horizontal dispersion that couples the RF frequency into the orbit.
struct ResponseModel {
  Matrix r_x;      // mm / mrad
  Matrix r_y;      // mm / mrad
  Vector eta;      // m, horizontal dispersion at the BPMs
  double alpha_c = 0.0;
  double f0 = 0.0;  // Hz

  // Orbit shift per Hz of RF detuning, mm/Hz: -1000 * eta / (alpha_c * f0).
  Vector frequency_column() const;
  // r_x with the frequency column appended (n_bpm x (n_corr + 1)).
  Matrix extended_x() const;
};

// Closed-orbit response of a thin-kick ring on a synthetic lattice:
//   R_ij = sqrt(beta_i beta_j) cos(pi nu - |phi_i - phi_j|) / (2 sin pi nu)
// Throws DegenerateTune on integer tunes.
ResponseModel derive_response(const RingConfig& config);

double closed_orbit_element(double beta_i, double beta_j, double phi_i, double phi_j, double nu);

// Machine-side magnet families and the linear tune/chromaticity maps.
struct MagnetModel {
  Vector i_quad_nom;  // A
  Vector i_sext_nom;  // A
  Vector i_bend_nom;  // A
  Matrix g_tune;      // 2 x n_quad, tune per A
  Matrix g_chrom;     // 2 x n_sext, chromaticity per A
};

MagnetModel derive_magnets(const RingConfig& config);

}  // namespace ringd::ring

#pragma once

#include <optional>
#include <string>

#include "common/linalg.hpp"
#include "optics/snapshot.hpp"
#include "ring/lattice.hpp"

namespace ringd::optics {

using linalg::Matrix;
using linalg::Vector;

struct AdjustmentParams {
  double d_nu_x = 0.0;
  double d_nu_y = 0.0;
  double d_xi_x = 0.0;
  double d_xi_y = 0.0;
  double s_sext = 1.0;
  double s_energy = 1.0;

  // Throws InvalidArgument unless s_energy > 0, s_sext >= 0 and all finite.
  void validate() const;
  bool operator==(const AdjustmentParams&) const = default;
};

// Sets one parameter by its short key (d_nu_x, d_nu_y, d_xi_x, d_xi_y,
// s_sext, s_energy). Throws InvalidArgument on an unknown key.
void set_param(AdjustmentParams& p, std::string_view key, double value);

struct OpticsSetup {
  std::string name;
  Vector i_quad_nom;
  Vector i_sext_nom;
  Vector i_bend_nom;
  Matrix m_tune;   // n_quad x 2, A per unit tune shift
  Matrix m_chrom;  // n_sext x 2, A per unit chromaticity shift
  // Forward maps of the machine, when the file carries them.
  std::optional<Matrix> g_tune;   // 2 x n_quad
  std::optional<Matrix> g_chrom;  // 2 x n_sext

  // Shapes, rank 2 of both M matrices, and G*M = I when G is known.
  // Throws ShapeMismatch, RankDeficient or InvalidArgument.
  void check(double consistency_tol = 1e-9) const;
};

struct MagnetCurrents {
  Vector quad;
  Vector sext;
  Vector bend;
};

MagnetCurrents compute_currents(const OpticsSetup& setup, const AdjustmentParams& p);

struct InferredParams {
  AdjustmentParams params;
  double quad_residual = 0.0;  // A, 2-norm
  double sext_residual = 0.0;
  double bend_residual = 0.0;
};

// Throws ShapeMismatch on wrong lengths, SingularFit when the fits are
// rank deficient or the nominal dipole currents average to zero.
InferredParams infer_params(const OpticsSetup& setup, const Vector& quad, const Vector& sext,
                            const Vector& bend);

// Optics for the simulated machine: nominal currents from the magnet model,
// M = G^T (G G^T)^-1 so that G*M = I.
OpticsSetup generate_optics(const ring::MagnetModel& magnets, std::string name);

namespace optics_file {
inline constexpr const char* kQuadNom = "OPTICSFILE:I-QUAD-NOM";
inline constexpr const char* kTuneCol0 = "OPTICSFILE:M-TUNE-COL0";
inline constexpr const char* kTuneCol1 = "OPTICSFILE:M-TUNE-COL1";
inline constexpr const char* kSextNom = "OPTICSFILE:I-SEXT-NOM";
inline constexpr const char* kChromCol0 = "OPTICSFILE:M-CHROM-COL0";
inline constexpr const char* kChromCol1 = "OPTICSFILE:M-CHROM-COL1";
inline constexpr const char* kBendNom = "OPTICSFILE:I-BEND-NOM";
inline constexpr const char* kTuneRow0 = "OPTICSFILE:G-TUNE-ROW0";
inline constexpr const char* kTuneRow1 = "OPTICSFILE:G-TUNE-ROW1";
inline constexpr const char* kChromRow0 = "OPTICSFILE:G-CHROM-ROW0";
inline constexpr const char* kChromRow1 = "OPTICSFILE:G-CHROM-ROW1";
}  // namespace optics_file

Snapshot optics_to_snapshot(const OpticsSetup& setup);
OpticsSetup optics_from_snapshot(const Snapshot& snapshot);
OpticsSetup load_optics(const std::string& path);
void write_optics(const std::string& path, const OpticsSetup& setup);

}  // namespace ringd::optics

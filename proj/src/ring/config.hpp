#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <string_view>

namespace ringd::ring {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

struct RingConfig {
  std::size_t n_bpm = 72;
  std::size_t n_corr = 72;  // per plane; the RF frequency is corrector n_corr + 1
  std::size_t n_quad = 174;
  std::size_t n_sext = 120;
  std::size_t n_bend = 36;

  double f0 = 499.654e6;   // Hz
  double alpha_c = 6.0e-4;
  double nu_x = 20.43;
  double nu_y = 8.74;
  double xi_x = 1.0;
  double xi_y = 1.0;

  double initial_current = 150.0;  // mA
  double tau_gas = 10.0;           // h; inf disables
  double c_touschek = 1500.0;      // mA h; inf disables

  double bpm_noise_rms = 1e-3;     // mm
  double static_orbit_rms = 0.5;   // mm
  double drift_amplitude = 0.02;   // mm
  double drift_period = 300.0;     // s
  double walk_rms = 2e-4;          // mm per step
  double energy_drift = 0.0;       // relative momentum per s

  bool colocated = false;     // correctors at BPM positions
  bool uniform_beta = false;  // beta = 10 m everywhere

  bool topup_enabled = false;
  double topup_threshold = 149.9;  // mA
  double topup_refill = 150.0;     // mA

  double dt = 2.0;       // s of simulated time per step
  double speedup = 1.0;  // simulated / wall time when free running
  std::uint64_t seed = 1;

  // Everything noise- and drift-free: the deterministic linear machine.
  static RingConfig quiet();
};

// Throws InvalidArgument with the offending key.
void validate(const RingConfig& config);

// `key = value` lines, `#` comments, optional `[section]` headers ignored.
RingConfig parse_config(std::string_view text);
RingConfig load_config(const std::string& path);
std::string format_config(const RingConfig& config);

}  // namespace ringd::ring

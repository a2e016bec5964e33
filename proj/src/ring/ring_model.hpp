#pragma once

#include <atomic>
#include <memory>
#include <mutex>
#include <random>
#include <string>
#include <thread>

#include "bus/access.hpp"
#include "ring/config.hpp"
#include "ring/lattice.hpp"

namespace ringd::ring {

namespace channels {
inline constexpr const char* kCurrent = "ARIDI-BEAM:CURRENT";
inline constexpr const char* kBpmX = "ARIDI-BPM:X";
inline constexpr const char* kBpmY = "ARIDI-BPM:Y";
inline constexpr const char* kTuneX = "RING:TUNE-X";
inline constexpr const char* kTuneY = "RING:TUNE-Y";
inline constexpr const char* kChromX = "RING:CHROM-X";
inline constexpr const char* kChromY = "RING:CHROM-Y";
inline constexpr const char* kTrueLifetime = "RING:TRUE-LIFETIME";
inline constexpr const char* kCorX = "ARIDI-COR-X:SET";
inline constexpr const char* kCorY = "ARIDI-COR-Y:SET";
inline constexpr const char* kQuad = "ARIDI-QUAD:SET";
inline constexpr const char* kSext = "ARIDI-SEXT:SET";
inline constexpr const char* kBend = "ARIDI-BEND:SET";
inline constexpr const char* kRfDeltaF = "ARIDI-RF:DELTA-F";
}  // namespace channels

struct RingState {
  double t_sim = 0.0;    // s since model start
  double current = 0.0;  // mA
  Vector kick_x, kick_y;  // mrad
  Vector quad, sext, bend;  // A
  double rf_delta_f = 0.0;  // Hz
  Vector perturbation_x, perturbation_y;  // mm, without BPM noise
  Vector orbit_x, orbit_y;  // mm, as published
  double tune_x = 0.0, tune_y = 0.0;
  double chrom_x = 0.0, chrom_y = 0.0;
};

// Current decay under gas + Touschek losses, dI/dt = -I (1/tau_gas + I/c_touschek),
// integrated in closed form. tau_gas in h, c_touschek in mA h, t in s.
double decay_current(double i0, double t, double tau_gas, double c_touschek);
// 1 / (1/tau_gas + I/c_touschek) in h; infinity when both terms vanish.
double instantaneous_lifetime(double current, double tau_gas, double c_touschek);

// The simulated machine. Owns its published channels on the bus and reads
// the setpoint channels at the start of every step.
class RingModel {
 public:
  // `t0` offsets published timestamps (wall-clock epoch when free running).
  RingModel(const RingConfig& config, bus::ChannelAccess& access, double t0 = 0.0);

  void step(double dt);
  void step() { step(config_.dt); }
  // Adds beam and publishes the current immediately. Returns the new current.
  double inject(double delta_i);
  void set_top_up(bool enabled, double threshold, double refill_to);

  const RingState& state() const noexcept { return state_; }
  const RingConfig& config() const noexcept { return config_; }
  const ResponseModel& response() const noexcept { return response_; }
  const MagnetModel& magnets() const noexcept { return magnets_; }
  double timestamp() const noexcept { return t0_ + state_.t_sim; }

  // Relative momentum deviation from RF detuning and energy drift.
  double momentum_deviation() const;

 private:
  void define_channels();
  void read_setpoints();
  void advance_perturbation(double dt);
  void compute_outputs();
  void publish();
  void publish_current();

  mutable std::mutex mutex_;
  RingConfig config_;
  bus::ChannelAccess& bus_;
  double t0_;
  ResponseModel response_;
  MagnetModel magnets_;
  RingState state_;

  // Decay since the last injection is evaluated in closed form from here.
  double epoch_current_ = 0.0;
  double epoch_time_ = 0.0;

  Vector static_x_, static_y_, drift_shape_x_, drift_shape_y_, walk_x_, walk_y_;
  std::mt19937_64 rng_;
  std::normal_distribution<double> unit_normal_{0.0, 1.0};
};

// Steps a RingModel on a wall-clock ticker (interval dt / speedup).
class RingRunner {
 public:
  explicit RingRunner(RingModel& model);
  ~RingRunner();
  RingRunner(const RingRunner&) = delete;
  RingRunner& operator=(const RingRunner&) = delete;

  void stop();

 private:
  RingModel& model_;
  std::atomic<bool> stop_{false};
  std::thread thread_;
};

}  // namespace ringd::ring

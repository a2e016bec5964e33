#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>

#include "bus/access.hpp"
#include "bus/supervisor.hpp"
#include "ofb/svd_corrector.hpp"
#include "ring/lattice.hpp"

namespace ringd::ofb {

enum class Mode { Stopped, Passive, Active };

const char* mode_name(Mode mode);
std::optional<Mode> parse_mode(std::string_view text);

// Channel names of one feedback plane.
struct PlaneChannels {
  // control (writable)
  std::string mode, period, sv_mask, f_step, gain, ref_orbit;
  // read-only
  std::string status, sv_values, kick_rms, kick_mean, delta_f, orbit_rms, iterations;
  // machine
  std::string bpm, corrector, rf;

  bool has_frequency() const { return !rf.empty(); }

  static PlaneChannels horizontal();
  static PlaneChannels vertical();
};

struct FeedbackSettings {
  Mode mode = Mode::Stopped;
  double period = 1.0;   // s
  double f_step = 10.0;  // Hz
  double gain = 1.0;
  // Scale of the frequency column inside the SVD; 0 picks the ratio of the
  // largest corrector column norm to the frequency column norm.
  double rf_weight = 0.0;
  bool run_loop = true;  // false: the owner calls iterate()
};

enum class Outcome { Stopped, NoNewData, Stale, Invalid, Computed, Applied };
const char* outcome_name(Outcome outcome);

// Slow orbit feedback for one plane. The horizontal plane treats the RF
// frequency as one more corrector whose moves are quantized to f_step.
//
// The loop keeps the feedback's own contribution to the machine (kicks and
// frequency offset actually written) and removes it from the measured orbit
// before solving, so every iteration solves for the full correction. The
// frequency goes to the nearest reachable step and the correctors absorb
// what the quantization leaves over.
class FeedbackService final : public bus::Service {
 public:
  FeedbackService(bus::ChannelAccess& access, const ring::ResponseModel& model,
                  PlaneChannels names = PlaneChannels::horizontal(), FeedbackSettings settings = {});
  ~FeedbackService() override;

  void start() override;
  void stop() override;

  // One loop pass at time `now` (seconds, same clock as the BPM stamps).
  Outcome iterate(double now);

  // Control writes go through the channels so they are visible to every
  // client and take effect at the next iteration.
  void set_mode(Mode mode);
  void set_mask(const Vector& mask);  // BadMask
  void set_gain(double gain);
  void set_f_step(double step);
  void set_period(double period);
  void set_reference(const Vector& reference);

  // BadTransition unless STOPPED.
  void load_response(const ring::ResponseModel& model);

  Mode mode() const;
  double period() const;
  Vector kicks() const;
  double delta_f() const;
  std::uint64_t iterations() const;
  double rf_weight() const;
  SvdCorrector corrector() const;
  const PlaneChannels& names() const noexcept { return names_; }

 private:
  void build(const ring::ResponseModel& model);
  void define_channels();
  void absorb_controls();
  void publish_invalid(const std::string& why);
  void set_status(const std::string& text);
  void run_loop();

  bus::ChannelAccess& bus_;
  PlaneChannels names_;
  FeedbackSettings settings_;

  mutable std::mutex mutex_;
  Matrix response_;  // BPM x corrector
  Vector freq_column_;
  std::unique_ptr<SvdCorrector> corrector_;  // extended with the frequency column when present
  Vector quant_compensation_;                // corrector kicks per Hz of unreached frequency
  double rf_weight_ = 1.0;

  Mode mode_ = Mode::Stopped;
  double period_ = 1.0;
  double f_step_ = 10.0;
  double gain_ = 1.0;
  Vector kicks_;  // accumulated corrector contribution (virtual in PASSIVE)
  double df_ = 0.0;
  Vector written_kicks_;
  double written_df_ = 0.0;
  double base_df_ = 0.0;  // RF offset found on the machine at start
  double last_bpm_ts_ = -1.0;
  std::uint64_t iterations_ = 0;
  std::string status_;

  std::atomic<bool> stop_{true};
  std::mutex loop_mutex_;
  std::condition_variable loop_cv_;
  std::thread loop_;
};

}  // namespace ringd::ofb

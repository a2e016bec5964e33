#pragma once

#include <array>
#include <mutex>
#include <string>

#include "bus/access.hpp"
#include "bus/supervisor.hpp"
#include "lifetime/algorithms.hpp"

namespace ringd::lifetime {

namespace channels {
inline constexpr const char* kTwoPoint = "LIFETIME:TWOPOINT";
inline constexpr const char* kLogFit = "LIFETIME:LOGFIT";
inline constexpr const char* kExpFit = "LIFETIME:EXPFIT";
inline constexpr const char* kMedFilt = "LIFETIME:MEDFILT";
inline constexpr const char* kWindowN = "LIFETIME:WINDOW-N";
inline constexpr const char* kEnable = "LIFETIME:ENABLE";
inline constexpr const char* kSamples = "LIFETIME:SAMPLES";
}  // namespace channels

const char* result_channel(Algorithm algorithm);

// Publishes the four lifetime estimates for every current event. The window
// length and the enable flag are channels read back on each event.
class LifetimeService final : public bus::Service {
 public:
  static constexpr std::size_t kDefaultWindow = 30;
  static constexpr double kInjectionFactor = 5.0;

  LifetimeService(bus::ChannelAccess& access, std::size_t window = kDefaultWindow,
                  std::string current_channel = "ARIDI-BEAM:CURRENT");
  ~LifetimeService() override;

  void start() override;
  void stop() override;

  // One current sample; what the monitor callback runs.
  void on_sample(double t, double current);

  LifetimeResult last(Algorithm algorithm) const;
  std::size_t window_size() const;

 private:
  void define_channels();

  bus::ChannelAccess& bus_;
  std::string current_channel_;
  std::size_t initial_window_;

  mutable std::mutex mutex_;
  SampleWindow window_;
  std::array<LifetimeResult, 4> last_{};
  std::array<double, 4> last_good_{};
  bus::Subscription subscription_;
};

}  // namespace ringd::lifetime

#pragma once

#include <mutex>
#include <string>
#include <vector>

#include "bus/access.hpp"
#include "bus/supervisor.hpp"
#include "optics/optics.hpp"

namespace ringd::optics {

namespace channels {
inline constexpr const char* kDNuX = "OPTICS:D-NU-X";
inline constexpr const char* kDNuY = "OPTICS:D-NU-Y";
inline constexpr const char* kDXiX = "OPTICS:D-XI-X";
inline constexpr const char* kDXiY = "OPTICS:D-XI-Y";
inline constexpr const char* kSSext = "OPTICS:S-SEXT";
inline constexpr const char* kSEnergy = "OPTICS:S-ENERGY";
inline constexpr const char* kName = "OPTICS:NAME";
inline constexpr const char* kApply = "OPTICS:APPLY";
inline constexpr const char* kStatus = "OPTICS:STATUS";
inline constexpr const char* kResidQuad = "OPTICS:RESID-QUAD";
inline constexpr const char* kResidSext = "OPTICS:RESID-SEXT";
inline constexpr const char* kResidBend = "OPTICS:RESID-BEND";
}  // namespace channels

// The six parameter channels in AdjustmentParams field order.
const std::vector<const char*>& parameter_channels();

// Creates the parameter channels if missing; existing ones keep their values.
void define_parameter_channels(bus::ChannelAccess& access, const AdjustmentParams& initial = {},
                               const std::string& name = {});

AdjustmentParams read_params(bus::ChannelAccess& access);

// Writes all magnet families, then the six parameters and the optics name.
// A failed sequence is repeated from the start up to `attempts` times so a
// partial write never stays on the machine; the last error propagates.
void apply(bus::ChannelAccess& access, const OpticsSetup& setup, const AdjustmentParams& p, int attempts = 2);

// Reads the magnet setpoints from the bus and inverts them.
InferredParams infer_from_bus(bus::ChannelAccess& access, const OpticsSetup& setup);

// Server mode: owns the OPTICS:* channels and re-applies the magnets
// whenever a parameter changes or OPTICS:APPLY is written. Residuals of the
// inversion of the live setpoints are published continuously.
class OpticsService final : public bus::Service {
 public:
  OpticsService(bus::ChannelAccess& access, OpticsSetup setup);
  ~OpticsService() override;

  void start() override;
  void stop() override;

  // Re-reads the parameter channels and applies when they changed (or
  // always, with force). Returns false when the parameters were rejected.
  bool reapply(bool force);
  AdjustmentParams applied() const;
  std::size_t apply_count() const;

 private:
  void publish_residuals();
  void set_status(const std::string& text);

  bus::ChannelAccess& bus_;
  OpticsSetup setup_;
  mutable std::mutex mutex_;
  AdjustmentParams applied_{};
  bool have_applied_ = false;
  std::size_t apply_count_ = 0;
  std::vector<bus::Subscription> subscriptions_;
};

}  // namespace ringd::optics

#pragma once

#include <memory>
#include <vector>

#include "bus/bus.hpp"
#include "bus/server.hpp"
#include "ring/ring_model.hpp"

namespace ringd::ring {

namespace machine_channels {
inline constexpr const char* kInject = "RING:INJECT";               // mA, a positive put injects
inline constexpr const char* kTopUpEnable = "RING:TOPUP-ENABLE";    // 0/1
inline constexpr const char* kTopUpThreshold = "RING:TOPUP-THRESHOLD";
inline constexpr const char* kTopUpRefill = "RING:TOPUP-REFILL";
}  // namespace machine_channels

// The simulated machine as one process: a bus, its TCP server, the ring
// model ticking on wall-clock time, and operator channels for injection and
// top-up.
class Machine {
 public:
  // `run` false leaves stepping to the caller.
  Machine(const RingConfig& config, const bus::Endpoint& endpoint, bool run = true);
  ~Machine();
  Machine(const Machine&) = delete;
  Machine& operator=(const Machine&) = delete;

  bus::Bus& bus() noexcept { return bus_; }
  RingModel& ring() noexcept { return *ring_; }
  std::uint16_t port() const noexcept { return server_->port(); }
  bus::Server& server() noexcept { return *server_; }

  void stop();

 private:
  void apply_top_up();

  bus::Bus bus_;
  std::unique_ptr<bus::ChannelAccess> session_;
  std::unique_ptr<RingModel> ring_;
  std::unique_ptr<bus::Server> server_;
  std::unique_ptr<RingRunner> runner_;
  std::vector<bus::Subscription> subscriptions_;
};

}  // namespace ringd::ring

#include "ring/machine.hpp"

#include "common/error.hpp"

namespace ringd::ring {

Machine::Machine(const RingConfig& config, const bus::Endpoint& endpoint, bool run) {
  session_ = bus_.session();
  ring_ = std::make_unique<RingModel>(config, *session_, wall_clock_now());

  namespace mc = machine_channels;
  session_->define(mc::kInject, ChannelMeta::scalar("mA", true, "write a positive current to inject"),
                   TimedValue(0.0));
  session_->define(mc::kTopUpEnable, ChannelMeta::scalar("", true, "top-up enable (0/1)"),
                   TimedValue(config.topup_enabled ? 1.0 : 0.0));
  session_->define(mc::kTopUpThreshold, ChannelMeta::scalar("mA", true, "top-up trigger level"),
                   TimedValue(config.topup_threshold));
  session_->define(mc::kTopUpRefill, ChannelMeta::scalar("mA", true, "top-up refill level"),
                   TimedValue(config.topup_refill));

  bool first = true;
  subscriptions_.push_back(bus_.monitor(mc::kInject, [this, first](const std::string&, const TimedValue& v) mutable {
    if (std::exchange(first, false)) return;
    if (v.ok() && v.scalar() > 0.0) ring_->inject(v.scalar());
  }));
  for (const char* name : {mc::kTopUpEnable, mc::kTopUpThreshold, mc::kTopUpRefill})
    subscriptions_.push_back(bus_.monitor(name, [this](const std::string&, const TimedValue&) { apply_top_up(); }));

  server_ = std::make_unique<bus::Server>(bus_, endpoint);
  if (run) runner_ = std::make_unique<RingRunner>(*ring_);
}

Machine::~Machine() { stop(); }

void Machine::apply_top_up() {
  namespace mc = machine_channels;
  try {
    ring_->set_top_up(bus_.get(mc::kTopUpEnable).scalar() != 0.0, bus_.get(mc::kTopUpThreshold).scalar(),
                      bus_.get(mc::kTopUpRefill).scalar());
  } catch (const Error&) {
    // threshold not below refill: keep the previous top-up settings
  }
}

void Machine::stop() {
  if (runner_) runner_->stop();
  for (auto& s : subscriptions_) s.cancel();
  subscriptions_.clear();
  if (server_) server_->stop();
}

}  // namespace ringd::ring

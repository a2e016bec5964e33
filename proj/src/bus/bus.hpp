#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <vector>

#include "bus/access.hpp"
#include "common/value.hpp"

namespace ringd::bus {

using OwnerId = std::uint64_t;
inline constexpr OwnerId kAnonymous = 0;
inline constexpr OwnerId kPrivileged = ~OwnerId{0};

namespace detail {
struct Channel;
struct Subscriber;
}  // namespace detail

class Bus;

// Direct handle to a channel, carrying the creator's ownership.
class ChannelHandle {
 public:
  ChannelHandle() = default;

  const std::string& name() const;
  void put(const TimedValue& value) const;
  TimedValue get() const;

 private:
  friend class Bus;
  ChannelHandle(Bus* bus, std::shared_ptr<detail::Channel> channel, OwnerId owner)
      : bus_(bus), channel_(std::move(channel)), owner_(owner) {}

  Bus* bus_ = nullptr;
  std::shared_ptr<detail::Channel> channel_;
  OwnerId owner_ = kAnonymous;
};

// Registry of named soft channels. Puts on one channel are serialized; each
// monitor gets its own queue and delivery thread, so callbacks never run
// under a channel lock and a slow callback cannot stall puts.
class Bus {
 public:
  using Clock = std::function<double()>;

  explicit Bus(Clock clock = wall_clock_now);
  ~Bus();
  Bus(const Bus&) = delete;
  Bus& operator=(const Bus&) = delete;

  ChannelHandle create_channel(const std::string& name, const ChannelMeta& meta,
                               const TimedValue& initial, OwnerId owner = kPrivileged);
  // create_channel, except an identical existing shape is adopted by `owner`.
  ChannelHandle define_channel(const std::string& name, const ChannelMeta& meta,
                               const TimedValue& initial, OwnerId owner);

  void put(const std::string& name, const TimedValue& value, OwnerId caller = kAnonymous);
  void put_text(const std::string& name, std::string_view text, OwnerId caller = kAnonymous,
                double timestamp = kAssignTimestamp, Status status = Status::Ok);
  TimedValue get(const std::string& name) const;
  ChannelMeta meta(const std::string& name) const;
  bool exists(const std::string& name) const;
  std::vector<std::string> list(std::string_view glob = {}) const;
  std::uint64_t put_count(const std::string& name) const;

  // Queued delivery on a dedicated thread. The current value is delivered
  // first, then one event per put, in put order.
  Subscription monitor(const std::string& name, EventCallback callback);
  // Inline delivery under the channel's ordering point. The sink must only
  // enqueue; it is how the network server feeds its per-client writers.
  Subscription monitor_sink(const std::string& name, EventCallback sink);

  // Blocks until every queued subscriber has delivered everything pending.
  // Must not be called from a monitor callback.
  void drain();

  OwnerId new_owner();
  std::unique_ptr<ChannelAccess> session();

 private:
  friend class ChannelHandle;

  std::shared_ptr<detail::Channel> find(const std::string& name) const;
  void put_to(detail::Channel& ch, TimedValue value, OwnerId caller);
  Subscription attach(const std::string& name, EventCallback callback, bool inline_delivery);

  Clock clock_;
  mutable std::shared_mutex registry_mutex_;
  std::map<std::string, std::shared_ptr<detail::Channel>> channels_;
  std::atomic<OwnerId> next_owner_{1};
};

}  // namespace ringd::bus

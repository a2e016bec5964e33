#pragma once

#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "common/value.hpp"

namespace ringd::bus {

using EventCallback = std::function<void(const std::string& name, const TimedValue& value)>;

// Move-only handle for a monitor; cancels on destruction.
class Subscription {
 public:
  Subscription() = default;
  explicit Subscription(std::function<void()> cancel) : cancel_(std::move(cancel)) {}
  Subscription(Subscription&& other) noexcept : cancel_(std::exchange(other.cancel_, nullptr)) {}
  Subscription& operator=(Subscription&& other) noexcept {
    if (this != &other) {
      cancel();
      cancel_ = std::exchange(other.cancel_, nullptr);
    }
    return *this;
  }
  Subscription(const Subscription&) = delete;
  Subscription& operator=(const Subscription&) = delete;
  ~Subscription() { cancel(); }

  void cancel() {
    if (auto c = std::exchange(cancel_, nullptr)) c();
  }
  bool active() const noexcept { return static_cast<bool>(cancel_); }

 private:
  std::function<void()> cancel_;
};

// What every service and tool sees of the bus: an in-process session or a
// TCP client. Channels created through `define` are owned by this access
// point and accept its puts even when not writable by others.
class ChannelAccess {
 public:
  virtual ~ChannelAccess() = default;

  // Creates the channel, or adopts it if it already exists with the same
  // shape (a service reconnecting). A different shape is DuplicateName.
  virtual void define(const std::string& name, const ChannelMeta& meta, const TimedValue& initial) = 0;
  virtual void put(const std::string& name, const TimedValue& value) = 0;
  // Value as text tokens, parsed against the channel shape by the bus.
  virtual void put_text(const std::string& name, std::string_view text) = 0;
  virtual TimedValue get(const std::string& name) = 0;
  virtual Subscription monitor(const std::string& name, EventCallback callback) = 0;
  virtual std::vector<std::string> list(std::string_view glob = {}) = 0;
  virtual bool connected() const { return true; }
};

}  // namespace ringd::bus

#pragma once

#include <atomic>
#include <condition_variable>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <thread>

#include "bus/access.hpp"
#include "bus/socket.hpp"
#include "bus/wire.hpp"

namespace ringd::bus {

// Single-connection protocol client. Requests are serialized; monitor events
// are dispatched on a separate thread so callbacks may issue requests.
class WireClient final : public ChannelAccess {
 public:
  static std::unique_ptr<WireClient> connect(const Endpoint& endpoint, double timeout_s = 5.0);
  ~WireClient() override;

  void define(const std::string& name, const ChannelMeta& meta, const TimedValue& initial) override;
  void put(const std::string& name, const TimedValue& value) override;
  void put_text(const std::string& name, std::string_view text) override;
  TimedValue get(const std::string& name) override;
  Subscription monitor(const std::string& name, EventCallback callback) override;
  std::vector<std::string> list(std::string_view glob = {}) override;
  bool connected() const override { return !disconnected_; }

  void close();
  double request_timeout = 10.0;

 private:
  explicit WireClient(Socket socket);

  wire::ServerFrame request(const std::string& line, std::vector<std::string>* names = nullptr);
  void expect_ok(const std::string& line, const std::string& name);
  void read_loop();
  void dispatch_loop();
  void unmonitor(const std::string& name, std::uint64_t id);

  Socket socket_;
  std::atomic<bool> disconnected_{false};

  std::mutex request_mutex_;  // one outstanding request at a time
  std::mutex reply_mutex_;
  std::condition_variable reply_cv_;
  std::optional<wire::ServerFrame> reply_;
  std::vector<std::string> reply_names_;

  std::mutex events_mutex_;
  std::condition_variable events_cv_;
  std::deque<std::pair<std::string, TimedValue>> events_;
  bool stop_dispatch_ = false;

  struct Monitor {
    std::uint64_t id;
    std::shared_ptr<EventCallback> callback;
  };
  std::mutex monitors_mutex_;
  std::map<std::string, Monitor> monitors_;
  std::uint64_t next_monitor_id_ = 1;

  std::shared_ptr<int> alive_ = std::make_shared<int>(0);
  std::thread reader_;
  std::thread dispatcher_;
};

}  // namespace ringd::bus

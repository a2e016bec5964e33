#pragma once

#include <atomic>
#include <condition_variable>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <thread>

#include "bus/access.hpp"
#include "bus/socket.hpp"

namespace ringd::bus {

// Anything with a start/stop lifecycle bound to one bus connection.
class Service {
 public:
  virtual ~Service() = default;
  virtual void start() = 0;
  virtual void stop() = 0;
};

// Keeps a service attached to a remote bus: connect, build, start, and on
// connection loss tear down and reconnect with exponential backoff
// (0.25 s doubling up to 5 s).
class Supervisor {
 public:
  using Factory = std::function<std::unique_ptr<Service>(ChannelAccess&)>;

  Supervisor(Endpoint endpoint, Factory factory);
  ~Supervisor();
  Supervisor(const Supervisor&) = delete;
  Supervisor& operator=(const Supervisor&) = delete;

  void stop();
  bool attached() const noexcept { return attached_; }
  std::size_t connects() const noexcept { return connects_; }
  std::string last_error() const;

 private:
  void run();

  Endpoint endpoint_;
  Factory factory_;
  std::atomic<bool> stop_{false};
  std::atomic<bool> attached_{false};
  std::atomic<std::size_t> connects_{0};
  mutable std::mutex mutex_;
  std::condition_variable wake_;
  std::string last_error_;
  std::thread thread_;
};

}  // namespace ringd::bus

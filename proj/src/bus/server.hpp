#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <list>
#include <memory>
#include <mutex>
#include <thread>

#include "bus/bus.hpp"
#include "bus/socket.hpp"

namespace ringd::bus {

// Serves a Bus over the line protocol. One reader and one writer thread per
// client; a client whose outbound queue exceeds `max_queue` lines is dropped.
class Server {
 public:
  static constexpr std::size_t kDefaultMaxQueue = 10000;

  Server(Bus& bus, const Endpoint& endpoint, std::size_t max_queue = kDefaultMaxQueue);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  std::uint16_t port() const noexcept { return port_; }
  Endpoint endpoint() const { return {host_, port_}; }
  std::size_t client_count() const;
  // Drops every client connection; the listener keeps accepting.
  void disconnect_all();
  void stop();

 private:
  struct Session;

  void accept_loop();
  void reap(bool all);

  Bus& bus_;
  std::string host_;
  std::uint16_t port_ = 0;
  std::size_t max_queue_;
  Socket listener_;
  std::thread acceptor_;
  std::atomic<bool> stopping_{false};
  mutable std::mutex sessions_mutex_;
  std::list<std::unique_ptr<Session>> sessions_;
};

}  // namespace ringd::bus

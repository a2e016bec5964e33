#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace ringd::bus {

struct Endpoint {
  std::string host = "127.0.0.1";
  std::uint16_t port = 5064;

  std::string str() const { return host + ":" + std::to_string(port); }
};

inline constexpr const char* kBusAddrEnv = "RINGD_BUS_ADDR";

// "host:port", ":port" or "port".
Endpoint parse_endpoint(std::string_view text);
// Flag value if given, else $RINGD_BUS_ADDR, else 127.0.0.1:5064.
Endpoint resolve_endpoint(std::string_view flag);

class Socket {
 public:
  Socket() = default;
  explicit Socket(int fd) : fd_(fd) {}
  Socket(Socket&& other) noexcept;
  Socket& operator=(Socket&& other) noexcept;
  Socket(const Socket&) = delete;
  Socket& operator=(const Socket&) = delete;
  ~Socket();

  int fd() const noexcept { return fd_; }
  bool valid() const noexcept { return fd_ >= 0; }
  void close();
  // Unblocks readers on other threads without releasing the descriptor.
  void shutdown();

  bool send_all(std::string_view data);

 private:
  int fd_ = -1;
};

Socket listen_tcp(const Endpoint& endpoint, std::uint16_t* bound_port = nullptr);
Socket connect_tcp(const Endpoint& endpoint, double timeout_s = 5.0);
Socket accept_client(const Socket& listener);

// Buffered '\n'-delimited reader; strips a trailing '\r'.
class LineReader {
 public:
  explicit LineReader(int fd) : fd_(fd) {}
  std::optional<std::string> next();

 private:
  int fd_;
  std::string buffer_;
  std::size_t scan_ = 0;
};

}  // namespace ringd::bus

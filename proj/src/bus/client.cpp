#include "bus/client.hpp"

#include <chrono>

#include "common/error.hpp"

namespace ringd::bus {

std::unique_ptr<WireClient> WireClient::connect(const Endpoint& endpoint, double timeout_s) {
  return std::unique_ptr<WireClient>(new WireClient(connect_tcp(endpoint, timeout_s)));
}

WireClient::WireClient(Socket socket) : socket_(std::move(socket)) {
  reader_ = std::thread([this] { read_loop(); });
  dispatcher_ = std::thread([this] { dispatch_loop(); });
}

WireClient::~WireClient() {
  alive_.reset();
  close();
}

void WireClient::close() {
  socket_.shutdown();
  if (reader_.joinable()) reader_.join();
  {
    std::lock_guard lock(events_mutex_);
    stop_dispatch_ = true;
  }
  events_cv_.notify_all();
  if (dispatcher_.joinable()) {
    if (dispatcher_.get_id() == std::this_thread::get_id())
      dispatcher_.detach();
    else
      dispatcher_.join();
  }
  socket_.close();
}

void WireClient::read_loop() {
  LineReader lines(socket_.fd());
  std::optional<wire::ServerFrame> pending_list;
  std::vector<std::string> names;
  while (auto line = lines.next()) {
    if (pending_list) {
      names.push_back(*line);
      if (names.size() < pending_list->count) continue;
    } else {
      wire::ServerFrame frame;
      try {
        frame = wire::parse_server_frame(*line);
      } catch (const Error&) {
        continue;
      }
      if (frame.verb == "EV") {
        {
          std::lock_guard lock(events_mutex_);
          events_.emplace_back(std::move(frame.name), std::move(frame.value));
        }
        events_cv_.notify_one();
        continue;
      }
      if (frame.verb == "CHANNELS" && frame.count > 0) {
        pending_list = std::move(frame);
        names.clear();
        continue;
      }
      pending_list = std::move(frame);
    }
    {
      std::lock_guard lock(reply_mutex_);
      reply_ = std::move(pending_list);
      reply_names_ = std::move(names);
    }
    pending_list.reset();
    names.clear();
    reply_cv_.notify_all();
  }
  disconnected_ = true;
  reply_cv_.notify_all();
}

void WireClient::dispatch_loop() {
  std::unique_lock lock(events_mutex_);
  for (;;) {
    events_cv_.wait(lock, [&] { return stop_dispatch_ || !events_.empty(); });
    if (stop_dispatch_) return;
    auto [name, value] = std::move(events_.front());
    events_.pop_front();
    lock.unlock();
    std::shared_ptr<EventCallback> cb;
    {
      std::lock_guard ml(monitors_mutex_);
      if (auto it = monitors_.find(name); it != monitors_.end()) cb = it->second.callback;
    }
    if (cb) {
      try {
        (*cb)(name, value);
      } catch (...) {
      }
    }
    lock.lock();
  }
}

wire::ServerFrame WireClient::request(const std::string& line, std::vector<std::string>* names) {
  std::lock_guard req(request_mutex_);
  if (disconnected_) throw Error(ErrorCode::Connection, "not connected");
  {
    std::lock_guard lock(reply_mutex_);
    reply_.reset();
  }
  if (!socket_.send_all(line)) throw Error(ErrorCode::Connection, "send failed");
  std::unique_lock lock(reply_mutex_);
  const bool got = reply_cv_.wait_for(lock, std::chrono::duration<double>(request_timeout),
                                      [&] { return reply_.has_value() || disconnected_.load(); });
  if (!reply_) throw Error(ErrorCode::Connection, got ? "connection lost" : "request timed out");
  wire::ServerFrame frame = std::move(*reply_);
  reply_.reset();
  if (names) *names = std::move(reply_names_);
  if (frame.verb == "ERR")
    throw Error(wire::error_from_token(frame.reason), frame.name + ": " + frame.reason);
  return frame;
}

void WireClient::expect_ok(const std::string& line, const std::string& name) {
  auto frame = request(line);
  if (frame.verb != "OK") throw Error(ErrorCode::Protocol, "unexpected reply to request on " + name);
}

void WireClient::define(const std::string& name, const ChannelMeta& meta, const TimedValue& initial) {
  require_channel_name(name);
  auto frame = request(wire::define_request(name, meta));
  if (frame.verb != "OK") throw Error(ErrorCode::Protocol, "unexpected reply to DEF " + name);
  // An adopted channel keeps its current value.
  if (frame.reason != "adopted") put(name, initial);
}

void WireClient::put(const std::string& name, const TimedValue& value) {
  if (const auto* s = std::get_if<std::string>(&value.value);
      s && s->find_first_of("\r\n") != std::string::npos)
    throw Error(ErrorCode::ShapeMismatch, "text may not contain line breaks");
  expect_ok(wire::put_request(name, value), name);
}

void WireClient::put_text(const std::string& name, std::string_view text) {
  if (text.find_first_of("\r\n") != std::string_view::npos)
    throw Error(ErrorCode::ShapeMismatch, "value may not contain line breaks");
  std::string line = "PUT " + name;
  if (!text.empty()) line.append(" ").append(text);
  line.push_back('\n');
  expect_ok(line, name);
}

TimedValue WireClient::get(const std::string& name) {
  auto frame = request("GET " + name + "\n");
  if (frame.verb != "VAL") throw Error(ErrorCode::Protocol, "unexpected reply to GET " + name);
  return std::move(frame.value);
}

Subscription WireClient::monitor(const std::string& name, EventCallback callback) {
  std::uint64_t id = 0;
  {
    std::lock_guard lock(monitors_mutex_);
    if (monitors_.count(name))
      throw Error(ErrorCode::InvalidArgument, "already monitoring '" + name + "' on this connection");
    id = next_monitor_id_++;
    monitors_.emplace(name, Monitor{id, std::make_shared<EventCallback>(std::move(callback))});
  }
  try {
    expect_ok("MON " + name + "\n", name);
  } catch (...) {
    std::lock_guard lock(monitors_mutex_);
    monitors_.erase(name);
    throw;
  }
  std::weak_ptr<int> alive = alive_;
  return Subscription([this, alive, name, id] {
    if (!alive.expired()) unmonitor(name, id);
  });
}

void WireClient::unmonitor(const std::string& name, std::uint64_t id) {
  {
    std::lock_guard lock(monitors_mutex_);
    auto it = monitors_.find(name);
    if (it == monitors_.end() || it->second.id != id) return;
    monitors_.erase(it);
  }
  if (disconnected_) return;
  try {
    expect_ok("UNMON " + name + "\n", name);
  } catch (const Error&) {
  }
}

std::vector<std::string> WireClient::list(std::string_view glob) {
  std::vector<std::string> names;
  std::string line = "LIST";
  if (!glob.empty()) line.append(" ").append(glob);
  line.push_back('\n');
  auto frame = request(line, &names);
  if (frame.verb != "CHANNELS") throw Error(ErrorCode::Protocol, "unexpected reply to LIST");
  return names;
}

}  // namespace ringd::bus

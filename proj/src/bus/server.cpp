#include "bus/server.hpp"

#include <condition_variable>
#include <deque>
#include <map>

#include "bus/wire.hpp"
#include "common/error.hpp"

namespace ringd::bus {

struct Server::Session {
  Session(Bus& bus, Socket socket, std::size_t max_queue)
      : bus(bus), sock(std::move(socket)), owner(bus.new_owner()), max_queue(max_queue) {}

  Bus& bus;
  Socket sock;
  OwnerId owner;
  std::size_t max_queue;

  std::mutex out_mutex;
  std::condition_variable out_cv;
  std::deque<std::string> outbound;
  bool closed = false;

  std::map<std::string, Subscription, std::less<>> subscriptions;
  std::thread reader;
  std::thread writer;
  std::atomic<bool> done{false};

  void start() {
    writer = std::thread([this] { write_loop(); });
    reader = std::thread([this] { read_loop(); });
  }

  void enqueue(std::string line) {
    {
      std::lock_guard lock(out_mutex);
      if (closed) return;
      if (outbound.size() >= max_queue) {
        // Slow consumer: drop the connection rather than grow without bound.
        closed = true;
        outbound.clear();
        sock.shutdown();
        out_cv.notify_all();
        return;
      }
      outbound.push_back(std::move(line));
    }
    out_cv.notify_one();
  }

  void write_loop() {
    std::unique_lock lock(out_mutex);
    for (;;) {
      out_cv.wait(lock, [&] { return closed || !outbound.empty(); });
      if (outbound.empty()) break;
      std::string batch;
      while (!outbound.empty() && batch.size() < 65536) {
        batch += outbound.front();
        outbound.pop_front();
      }
      lock.unlock();
      const bool ok = sock.send_all(batch);
      lock.lock();
      if (!ok) {
        closed = true;
        outbound.clear();
        sock.shutdown();
        break;
      }
    }
  }

  void read_loop() {
    LineReader lines(sock.fd());
    while (auto line = lines.next()) {
      {
        std::lock_guard lock(out_mutex);
        if (closed) break;
      }
      handle(*line);
    }
    subscriptions.clear();
    {
      std::lock_guard lock(out_mutex);
      closed = true;
    }
    out_cv.notify_all();
    writer.join();
    sock.shutdown();
    done = true;
  }

  void handle(std::string_view line) {
    std::string_view rest = line;
    const auto verb = wire::next_token(rest);
    if (verb.empty()) return;
    std::string name;
    try {
      if (verb == "LIST") {
        const auto names = bus.list(trim(rest));
        std::string out = "CHANNELS " + std::to_string(names.size()) + "\n";
        for (const auto& n : names) out.append(n).push_back('\n');
        enqueue(std::move(out));
        return;
      }
      name = std::string(wire::next_token(rest));
      if (name.empty()) throw Error(ErrorCode::Protocol, "missing channel name");
      if (verb == "GET") {
        enqueue(wire::value_frame("VAL", name, bus.get(name)));
      } else if (verb == "PUT") {
        const auto args = wire::parse_put_args(rest);
        bus.put_text(name, args.value_text, owner, args.timestamp, args.status);
        enqueue("OK\n");
      } else if (verb == "MON") {
        if (!bus.exists(name)) throw Error(ErrorCode::UnknownChannel, name);
        if (subscriptions.count(name)) {
          enqueue("OK\n");
          return;
        }
        enqueue("OK\n");
        subscriptions.emplace(name, bus.monitor_sink(name, [this](const std::string& n, const TimedValue& v) {
                                enqueue(wire::value_frame("EV", n, v));
                              }));
      } else if (verb == "UNMON") {
        if (!bus.exists(name)) throw Error(ErrorCode::UnknownChannel, name);
        subscriptions.erase(name);
        enqueue("OK\n");
      } else if (verb == "DEF") {
        const ChannelMeta meta = wire::parse_define_args(rest);
        Value initial = 0.0;
        if (meta.kind == ValueKind::Vector) initial = std::vector<double>(meta.vector_length, 0.0);
        if (meta.kind == ValueKind::Text) initial = std::string();
        const bool existed = bus.exists(name);
        bus.define_channel(name, meta, TimedValue(std::move(initial)), owner);
        enqueue(existed ? "OK adopted\n" : "OK new\n");
      } else {
        throw Error(ErrorCode::Protocol, "unknown verb");
      }
    } catch (const Error& e) {
      enqueue(wire::error_frame(name, e.code()));
    } catch (const std::exception&) {
      enqueue(wire::error_frame(name, ErrorCode::Protocol));
    }
  }
};

Server::Server(Bus& bus, const Endpoint& endpoint, std::size_t max_queue)
    : bus_(bus), host_(endpoint.host), max_queue_(max_queue) {
  listener_ = listen_tcp(endpoint, &port_);
  acceptor_ = std::thread([this] { accept_loop(); });
}

Server::~Server() { stop(); }

void Server::accept_loop() {
  while (!stopping_) {
    Socket client = accept_client(listener_);
    if (!client.valid() || stopping_) break;
    auto session = std::make_unique<Session>(bus_, std::move(client), max_queue_);
    session->start();
    std::lock_guard lock(sessions_mutex_);
    sessions_.push_back(std::move(session));
    reap(false);
  }
}

void Server::reap(bool all) {
  for (auto it = sessions_.begin(); it != sessions_.end();) {
    auto& s = **it;
    if (all) s.sock.shutdown();
    if (all || s.done) {
      if (s.reader.joinable()) s.reader.join();
      it = sessions_.erase(it);
    } else {
      ++it;
    }
  }
}

std::size_t Server::client_count() const {
  std::lock_guard lock(sessions_mutex_);
  std::size_t n = 0;
  for (const auto& s : sessions_)
    if (!s->done) ++n;
  return n;
}

void Server::disconnect_all() {
  std::lock_guard lock(sessions_mutex_);
  reap(true);
}

void Server::stop() {
  if (stopping_.exchange(true)) return;
  listener_.shutdown();
  if (acceptor_.joinable()) acceptor_.join();
  listener_.close();
  std::lock_guard lock(sessions_mutex_);
  reap(true);
}

}  // namespace ringd::bus

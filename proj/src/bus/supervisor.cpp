#include "bus/supervisor.hpp"

#include <algorithm>
#include <chrono>

#include "bus/client.hpp"

namespace ringd::bus {

Supervisor::Supervisor(Endpoint endpoint, Factory factory)
    : endpoint_(std::move(endpoint)), factory_(std::move(factory)) {
  thread_ = std::thread([this] { run(); });
}

Supervisor::~Supervisor() { stop(); }

void Supervisor::stop() {
  {
    std::lock_guard lock(mutex_);
    stop_ = true;
  }
  wake_.notify_all();
  if (thread_.joinable()) thread_.join();
}

std::string Supervisor::last_error() const {
  std::lock_guard lock(mutex_);
  return last_error_;
}

void Supervisor::run() {
  using namespace std::chrono_literals;
  auto backoff = std::chrono::milliseconds(250);
  while (!stop_) {
    try {
      auto client = WireClient::connect(endpoint_, 2.0);
      auto service = factory_(*client);
      service->start();
      attached_ = true;
      ++connects_;
      backoff = 250ms;
      {
        std::unique_lock lock(mutex_);
        while (!stop_ && client->connected()) wake_.wait_for(lock, 100ms);
      }
      attached_ = false;
      service->stop();
      service.reset();
      client.reset();
      if (stop_) break;
    } catch (const std::exception& e) {
      attached_ = false;
      std::lock_guard lock(mutex_);
      last_error_ = e.what();
    }
    std::unique_lock lock(mutex_);
    wake_.wait_for(lock, backoff, [&] { return stop_.load(); });
    backoff = std::min<std::chrono::milliseconds>(backoff * 2, 5000ms);
  }
}

}  // namespace ringd::bus

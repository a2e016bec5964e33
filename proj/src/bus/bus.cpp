#include "bus/bus.hpp"

#include <algorithm>
#include <condition_variable>
#include <deque>
#include <thread>

#include "common/error.hpp"

namespace ringd::bus {

namespace detail {

struct Subscriber {
  std::string name;
  EventCallback callback;
  bool inline_delivery = false;

  std::mutex mutex;
  std::condition_variable wake;
  std::condition_variable idle;
  std::deque<TimedValue> queue;
  bool stopping = false;
  bool busy = false;
  std::thread worker;

  void deliver(const TimedValue& value) {
    if (inline_delivery) {
      callback(name, value);
      return;
    }
    {
      std::lock_guard lock(mutex);
      if (stopping) return;
      queue.push_back(value);
    }
    wake.notify_one();
  }

  void run() {
    std::unique_lock lock(mutex);
    for (;;) {
      wake.wait(lock, [&] { return stopping || !queue.empty(); });
      if (stopping) break;
      TimedValue next = std::move(queue.front());
      queue.pop_front();
      busy = true;
      lock.unlock();
      try {
        callback(name, next);
      } catch (...) {
        // A throwing subscriber must not take the delivery thread down.
      }
      lock.lock();
      busy = false;
      if (queue.empty()) idle.notify_all();
    }
    queue.clear();
    busy = false;
    idle.notify_all();
  }

  void wait_idle() {
    std::unique_lock lock(mutex);
    idle.wait(lock, [&] { return stopping || (queue.empty() && !busy); });
  }

  void stop() {
    {
      std::lock_guard lock(mutex);
      stopping = true;
    }
    wake.notify_all();
    idle.notify_all();
    if (worker.joinable()) {
      if (worker.get_id() == std::this_thread::get_id())
        worker.detach();
      else
        worker.join();
    }
  }
};

struct Channel {
  std::string name;
  ChannelMeta meta;
  OwnerId owner = kAnonymous;

  mutable std::mutex mutex;
  TimedValue value;
  std::uint64_t put_count = 0;
  std::vector<std::shared_ptr<Subscriber>> subscribers;
};

}  // namespace detail

using detail::Channel;
using detail::Subscriber;

const std::string& ChannelHandle::name() const { return channel_->name; }

void ChannelHandle::put(const TimedValue& value) const { bus_->put_to(*channel_, value, owner_); }

TimedValue ChannelHandle::get() const {
  std::lock_guard lock(channel_->mutex);
  return channel_->value;
}

Bus::Bus(Clock clock) : clock_(std::move(clock)) {}

Bus::~Bus() {
  std::vector<std::shared_ptr<Subscriber>> subs;
  {
    std::unique_lock lock(registry_mutex_);
    for (auto& [_, ch] : channels_) {
      std::lock_guard cl(ch->mutex);
      subs.insert(subs.end(), ch->subscribers.begin(), ch->subscribers.end());
      ch->subscribers.clear();
    }
  }
  for (auto& s : subs) s->stop();
}

OwnerId Bus::new_owner() { return next_owner_.fetch_add(1); }

std::shared_ptr<Channel> Bus::find(const std::string& name) const {
  std::shared_lock lock(registry_mutex_);
  auto it = channels_.find(name);
  if (it == channels_.end()) throw Error(ErrorCode::UnknownChannel, "unknown channel '" + name + "'");
  return it->second;
}

namespace {

TimedValue normalize_initial(const ChannelMeta& meta, TimedValue initial, double now) {
  if (meta.kind == ValueKind::Vector && meta.vector_length == 1)
    if (const auto* d = std::get_if<double>(&initial.value)) initial.value = std::vector<double>{*d};
  check_shape(meta, initial.value);
  if (initial.timestamp < 0) initial.timestamp = now;
  return initial;
}

}  // namespace

ChannelHandle Bus::create_channel(const std::string& name, const ChannelMeta& meta,
                                  const TimedValue& initial, OwnerId owner) {
  require_channel_name(name);
  auto ch = std::make_shared<Channel>();
  ch->name = name;
  ch->meta = meta;
  ch->owner = owner;
  ch->value = normalize_initial(meta, initial, clock_());

  std::unique_lock lock(registry_mutex_);
  if (!channels_.emplace(name, ch).second)
    throw Error(ErrorCode::DuplicateName, "channel '" + name + "' already exists");
  return ChannelHandle(this, ch, owner);
}

ChannelHandle Bus::define_channel(const std::string& name, const ChannelMeta& meta,
                                  const TimedValue& initial, OwnerId owner) {
  require_channel_name(name);
  {
    std::unique_lock lock(registry_mutex_);
    if (auto it = channels_.find(name); it != channels_.end()) {
      auto& ch = it->second;
      if (!ch->meta.same_shape(meta))
        throw Error(ErrorCode::DuplicateName, "channel '" + name + "' exists with another shape");
      std::lock_guard cl(ch->mutex);
      ch->owner = owner;
      return ChannelHandle(this, ch, owner);
    }
  }
  return create_channel(name, meta, initial, owner);
}

void Bus::put_to(Channel& ch, TimedValue value, OwnerId caller) {
  if (!ch.meta.writable && caller != ch.owner && caller != kPrivileged)
    throw Error(ErrorCode::ReadOnly, "channel '" + ch.name + "' is read-only");
  if (ch.meta.kind == ValueKind::Vector && ch.meta.vector_length == 1)
    if (const auto* d = std::get_if<double>(&value.value)) value.value = std::vector<double>{*d};
  check_shape(ch.meta, value.value);

  const bool stamp = value.timestamp < 0;
  const double now = stamp ? clock_() : 0.0;
  std::lock_guard lock(ch.mutex);
  if (stamp) value.timestamp = now;
  value.timestamp = std::max(value.timestamp, ch.value.timestamp);
  ch.value = std::move(value);
  ++ch.put_count;
  for (auto& s : ch.subscribers) s->deliver(ch.value);
}

void Bus::put(const std::string& name, const TimedValue& value, OwnerId caller) {
  put_to(*find(name), value, caller);
}

void Bus::put_text(const std::string& name, std::string_view text, OwnerId caller, double timestamp,
                   Status status) {
  auto ch = find(name);
  put_to(*ch, TimedValue(parse_value_for(ch->meta, text), timestamp, status), caller);
}

TimedValue Bus::get(const std::string& name) const {
  auto ch = find(name);
  std::lock_guard lock(ch->mutex);
  return ch->value;
}

ChannelMeta Bus::meta(const std::string& name) const { return find(name)->meta; }

bool Bus::exists(const std::string& name) const {
  std::shared_lock lock(registry_mutex_);
  return channels_.count(name) != 0;
}

std::vector<std::string> Bus::list(std::string_view glob) const {
  std::shared_lock lock(registry_mutex_);
  std::vector<std::string> out;
  for (const auto& [name, _] : channels_)
    if (glob_match(glob, name)) out.push_back(name);
  return out;
}

std::uint64_t Bus::put_count(const std::string& name) const {
  auto ch = find(name);
  std::lock_guard lock(ch->mutex);
  return ch->put_count;
}

Subscription Bus::attach(const std::string& name, EventCallback callback, bool inline_delivery) {
  auto ch = find(name);
  auto sub = std::make_shared<Subscriber>();
  sub->name = name;
  sub->callback = std::move(callback);
  sub->inline_delivery = inline_delivery;
  if (!inline_delivery) sub->worker = std::thread([self = sub] { self->run(); });

  {
    std::lock_guard lock(ch->mutex);
    sub->deliver(ch->value);
    ch->subscribers.push_back(sub);
  }

  std::weak_ptr<Channel> weak_ch = ch;
  return Subscription([weak_ch, sub] {
    if (auto c = weak_ch.lock()) {
      std::lock_guard lock(c->mutex);
      std::erase(c->subscribers, sub);
    }
    sub->stop();
  });
}

Subscription Bus::monitor(const std::string& name, EventCallback callback) {
  return attach(name, std::move(callback), false);
}

Subscription Bus::monitor_sink(const std::string& name, EventCallback sink) {
  return attach(name, std::move(sink), true);
}

void Bus::drain() {
  for (;;) {
    std::vector<std::shared_ptr<Subscriber>> subs;
    {
      std::shared_lock lock(registry_mutex_);
      for (auto& [_, ch] : channels_) {
        std::lock_guard cl(ch->mutex);
        for (auto& s : ch->subscribers)
          if (!s->inline_delivery) subs.push_back(s);
      }
    }
    bool all_idle = true;
    for (auto& s : subs) {
      {
        std::lock_guard lock(s->mutex);
        if (s->queue.empty() && !s->busy) continue;
      }
      all_idle = false;
      s->wait_idle();
    }
    if (all_idle) return;
  }
}

namespace {

class LocalSession final : public ChannelAccess {
 public:
  LocalSession(Bus& bus, OwnerId owner) : bus_(bus), owner_(owner) {}

  void define(const std::string& name, const ChannelMeta& meta, const TimedValue& initial) override {
    bus_.define_channel(name, meta, initial, owner_);
  }
  void put(const std::string& name, const TimedValue& value) override { bus_.put(name, value, owner_); }
  void put_text(const std::string& name, std::string_view text) override {
    bus_.put_text(name, text, owner_);
  }
  TimedValue get(const std::string& name) override { return bus_.get(name); }
  Subscription monitor(const std::string& name, EventCallback callback) override {
    return bus_.monitor(name, std::move(callback));
  }
  std::vector<std::string> list(std::string_view glob) override { return bus_.list(glob); }

 private:
  Bus& bus_;
  OwnerId owner_;
};

}  // namespace

std::unique_ptr<ChannelAccess> Bus::session() { return std::make_unique<LocalSession>(*this, new_owner()); }

}  // namespace ringd::bus

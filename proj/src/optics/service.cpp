#include "optics/service.hpp"

#include "common/error.hpp"
#include "ring/ring_model.hpp"

namespace ringd::optics {

namespace {

std::array<double, 6> as_array(const AdjustmentParams& p) {
  return {p.d_nu_x, p.d_nu_y, p.d_xi_x, p.d_xi_y, p.s_sext, p.s_energy};
}

AdjustmentParams from_array(const std::array<double, 6>& a) {
  return {a[0], a[1], a[2], a[3], a[4], a[5]};
}

void put_magnets(bus::ChannelAccess& access, const MagnetCurrents& c) {
  namespace rc = ring::channels;
  access.put(rc::kQuad, TimedValue(c.quad));
  access.put(rc::kSext, TimedValue(c.sext));
  access.put(rc::kBend, TimedValue(c.bend));
}

}  // namespace

const std::vector<const char*>& parameter_channels() {
  static const std::vector<const char*> names{channels::kDNuX,  channels::kDNuY,  channels::kDXiX,
                                              channels::kDXiY, channels::kSSext, channels::kSEnergy};
  return names;
}

void define_parameter_channels(bus::ChannelAccess& access, const AdjustmentParams& initial, const std::string& name) {
  static const char* const descriptions[6] = {"horizontal tune shift", "vertical tune shift",
                                              "horizontal chromaticity shift", "vertical chromaticity shift",
                                              "sextupole scale", "global energy scale"};
  const auto values = as_array(initial);
  const auto& names = parameter_channels();
  for (std::size_t i = 0; i < names.size(); ++i)
    access.define(names[i], ChannelMeta::scalar("", true, descriptions[i]), TimedValue(values[i]));
  access.define(channels::kName, ChannelMeta::text(true, "active optics"), TimedValue(name));
}

AdjustmentParams read_params(bus::ChannelAccess& access) {
  std::array<double, 6> a{};
  const auto& names = parameter_channels();
  for (std::size_t i = 0; i < names.size(); ++i) a[i] = access.get(names[i]).scalar();
  return from_array(a);
}

void apply(bus::ChannelAccess& access, const OpticsSetup& setup, const AdjustmentParams& p, int attempts) {
  const MagnetCurrents currents = compute_currents(setup, p);
  const auto values = as_array(p);
  const auto& names = parameter_channels();
  for (int attempt = 1;; ++attempt) {
    try {
      put_magnets(access, currents);
      define_parameter_channels(access, p, setup.name);
      for (std::size_t i = 0; i < names.size(); ++i) access.put(names[i], TimedValue(values[i]));
      access.put(channels::kName, TimedValue(setup.name));
      return;
    } catch (const Error& e) {
      if (attempt >= attempts || e.code() == ErrorCode::Connection) throw;
    }
  }
}

InferredParams infer_from_bus(bus::ChannelAccess& access, const OpticsSetup& setup) {
  namespace rc = ring::channels;
  return infer_params(setup, access.get(rc::kQuad).vector(), access.get(rc::kSext).vector(),
                      access.get(rc::kBend).vector());
}

OpticsService::OpticsService(bus::ChannelAccess& access, OpticsSetup setup)
    : bus_(access), setup_(std::move(setup)) {
  setup_.check();
}

OpticsService::~OpticsService() { stop(); }

void OpticsService::start() {
  define_parameter_channels(bus_, {}, setup_.name);
  bus_.put(channels::kName, TimedValue(setup_.name));
  bus_.define(channels::kApply, ChannelMeta::scalar("", true, "write to re-apply the optics"), TimedValue(0.0));
  bus_.define(channels::kStatus, ChannelMeta::text(false, "optics service status"), TimedValue(std::string("idle")));
  for (const char* r : {channels::kResidQuad, channels::kResidSext, channels::kResidBend})
    bus_.define(r, ChannelMeta::scalar("A", false, "setpoint residual against the optics"),
                TimedValue(0.0, kAssignTimestamp, Status::Invalid));

  {
    std::lock_guard lock(mutex_);
    have_applied_ = false;
  }
  reapply(true);

  auto guarded = [](auto fn) {
    return [fn](const std::string&, const TimedValue&) mutable {
      try {
        fn();
      } catch (const Error&) {
        // connection gone; the supervisor restarts the service
      }
    };
  };
  for (const char* name : parameter_channels())
    subscriptions_.push_back(bus_.monitor(name, guarded([this] { reapply(false); })));
  bool first_apply_event = true;
  subscriptions_.push_back(bus_.monitor(channels::kApply, guarded([this, first_apply_event]() mutable {
    if (std::exchange(first_apply_event, false)) return;
    reapply(true);
  })));
  namespace rc = ring::channels;
  for (const char* name : {rc::kQuad, rc::kSext, rc::kBend})
    subscriptions_.push_back(bus_.monitor(name, guarded([this] {
      std::lock_guard lock(mutex_);
      publish_residuals();
    })));
}

void OpticsService::stop() {
  for (auto& s : subscriptions_) s.cancel();
  subscriptions_.clear();
}

bool OpticsService::reapply(bool force) {
  std::lock_guard lock(mutex_);
  const AdjustmentParams p = read_params(bus_);
  if (!force && have_applied_ && p == applied_) return true;
  try {
    put_magnets(bus_, compute_currents(setup_, p));
  } catch (const Error& e) {
    if (e.code() != ErrorCode::InvalidArgument) throw;
    set_status(std::string("rejected: ") + e.what());
    return false;
  }
  applied_ = p;
  have_applied_ = true;
  ++apply_count_;
  set_status("applied");
  publish_residuals();
  return true;
}

AdjustmentParams OpticsService::applied() const {
  std::lock_guard lock(mutex_);
  return applied_;
}

std::size_t OpticsService::apply_count() const {
  std::lock_guard lock(mutex_);
  return apply_count_;
}

void OpticsService::publish_residuals() {
  try {
    const auto r = infer_from_bus(bus_, setup_);
    bus_.put(channels::kResidQuad, TimedValue(r.quad_residual));
    bus_.put(channels::kResidSext, TimedValue(r.sext_residual));
    bus_.put(channels::kResidBend, TimedValue(r.bend_residual));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::Connection) throw;
    for (const char* c : {channels::kResidQuad, channels::kResidSext, channels::kResidBend})
      bus_.put(c, TimedValue(0.0, kAssignTimestamp, Status::Invalid));
  }
}

void OpticsService::set_status(const std::string& text) { bus_.put(channels::kStatus, TimedValue(text)); }

}  // namespace ringd::optics

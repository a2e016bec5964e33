#include "lifetime/service.hpp"

#include <cmath>

#include "common/error.hpp"

namespace ringd::lifetime {

namespace {
constexpr std::array<Algorithm, 4> kAlgorithms{Algorithm::TwoPoint, Algorithm::LogFit, Algorithm::ExpFit,
                                               Algorithm::MedFilt};
}

const char* result_channel(Algorithm algorithm) {
  switch (algorithm) {
    case Algorithm::TwoPoint: return channels::kTwoPoint;
    case Algorithm::LogFit: return channels::kLogFit;
    case Algorithm::ExpFit: return channels::kExpFit;
    case Algorithm::MedFilt: return channels::kMedFilt;
  }
  return "";
}

LifetimeService::LifetimeService(bus::ChannelAccess& access, std::size_t window, std::string current_channel)
    : bus_(access), current_channel_(std::move(current_channel)), initial_window_(window), window_(window) {
  if (window < 2) throw Error(ErrorCode::InvalidArgument, "lifetime window must hold at least 2 samples");
  for (std::size_t i = 0; i < kAlgorithms.size(); ++i) last_[i].algorithm = kAlgorithms[i];
}

LifetimeService::~LifetimeService() { stop(); }

void LifetimeService::define_channels() {
  for (auto a : kAlgorithms)
    bus_.define(result_channel(a),
                ChannelMeta::scalar("h", false, std::string("beam lifetime, ") + algorithm_name(a)),
                TimedValue(0.0, kAssignTimestamp, Status::Invalid));
  bus_.define(channels::kWindowN, ChannelMeta::scalar("", true, "lifetime window length (samples)"),
              TimedValue(static_cast<double>(initial_window_)));
  bus_.define(channels::kEnable, ChannelMeta::scalar("", true, "lifetime calculation enable (0/1)"),
              TimedValue(1.0));
  bus_.define(channels::kSamples, ChannelMeta::scalar("", false, "samples in lifetime window"), TimedValue(0.0));
}

void LifetimeService::start() {
  {
    std::lock_guard lock(mutex_);
    window_.clear();
  }
  define_channels();
  subscription_ = bus_.monitor(current_channel_, [this](const std::string&, const TimedValue& v) {
    if (!v.ok()) return;
    try {
      on_sample(v.timestamp, v.scalar());
    } catch (const Error&) {
      // bus went away mid-update; the supervisor reconnects
    }
  });
}

void LifetimeService::stop() {
  subscription_.cancel();
  std::lock_guard lock(mutex_);
  window_.clear();
}

void LifetimeService::on_sample(double t, double current) {
  double n_param = static_cast<double>(initial_window_);
  bool enabled = true;
  try {
    n_param = bus_.get(channels::kWindowN).scalar();
    enabled = bus_.get(channels::kEnable).scalar() != 0.0;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::UnknownChannel) throw;
  }

  std::array<LifetimeResult, 4> results;
  std::size_t n_samples = 0;
  {
    std::lock_guard lock(mutex_);
    if (std::isfinite(n_param) && n_param >= 2) window_.set_capacity(static_cast<std::size_t>(n_param));

    // A jump well above the recent step size is an injection: the decay
    // before it says nothing about the decay after it.
    if (!window_.empty()) {
      const double jump = current - window_.back().current;
      if (jump > 0.0 && jump > kInjectionFactor * window_.rms_step()) window_.clear();
    }
    window_.push({t, current});
    n_samples = window_.size();

    const auto samples = window_.samples();
    for (std::size_t i = 0; i < kAlgorithms.size(); ++i) {
      LifetimeResult r{0.0, false, kAlgorithms[i]};
      if (enabled) {
        try {
          r = evaluate(kAlgorithms[i], samples);
        } catch (const Error&) {
        }
      }
      last_[i] = r;
      if (r.valid) last_good_[i] = r.tau;
      // Invalid results carry the last good number so displays do not jump.
      results[i] = {r.valid ? r.tau : last_good_[i], r.valid, r.algorithm};
    }
  }

  for (const auto& r : results)
    bus_.put(result_channel(r.algorithm), TimedValue(r.tau, t, r.valid ? Status::Ok : Status::Invalid));
  bus_.put(channels::kSamples, TimedValue(static_cast<double>(n_samples), t));
}

LifetimeResult LifetimeService::last(Algorithm algorithm) const {
  std::lock_guard lock(mutex_);
  return last_[static_cast<std::size_t>(algorithm)];
}

std::size_t LifetimeService::window_size() const {
  std::lock_guard lock(mutex_);
  return window_.size();
}

}  // namespace ringd::lifetime

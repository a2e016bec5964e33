#include "ring/ring_model.hpp"

#include <chrono>
#include <cmath>
#include <numbers>

#include "common/error.hpp"

namespace ringd::ring {

double decay_current(double i0, double t, double tau_gas, double c_touschek) {
  const double a = std::isinf(tau_gas) ? 0.0 : 1.0 / (tau_gas * 3600.0);
  const double b = std::isinf(c_touschek) ? 0.0 : 1.0 / (c_touschek * 3600.0);
  if (i0 <= 0.0 || t <= 0.0) return std::max(i0, 0.0);
  if (b == 0.0) return i0 * std::exp(-a * t);
  if (a == 0.0) return i0 / (1.0 + b * i0 * t);
  // I(t) = a I0 e^{-at} / (a + b I0 (1 - e^{-at}))
  const double decay = std::exp(-a * t);
  return a * i0 * decay / (a - b * i0 * std::expm1(-a * t));
}

double instantaneous_lifetime(double current, double tau_gas, double c_touschek) {
  const double rate = (std::isinf(tau_gas) ? 0.0 : 1.0 / tau_gas) +
                      (std::isinf(c_touschek) ? 0.0 : std::max(current, 0.0) / c_touschek);
  return rate > 0.0 ? 1.0 / rate : kInfinity;
}

namespace {

Vector random_pattern(std::mt19937_64& rng, std::size_t n, double rms) {
  std::normal_distribution<double> g(0.0, 1.0);
  Vector v(n);
  double ss = 0.0;
  for (auto& x : v) {
    x = g(rng);
    ss += x * x;
  }
  const double scale = ss > 0.0 ? rms / std::sqrt(ss / static_cast<double>(n)) : 0.0;
  for (auto& x : v) x *= scale;
  return v;
}

}  // namespace

RingModel::RingModel(const RingConfig& config, bus::ChannelAccess& access, double t0)
    : config_(config), bus_(access), t0_(t0), rng_(config.seed) {
  validate(config_);
  response_ = derive_response(config_);
  magnets_ = derive_magnets(config_);

  state_.current = config_.initial_current;
  epoch_current_ = config_.initial_current;
  state_.kick_x.assign(config_.n_corr, 0.0);
  state_.kick_y.assign(config_.n_corr, 0.0);
  state_.quad = magnets_.i_quad_nom;
  state_.sext = magnets_.i_sext_nom;
  state_.bend = magnets_.i_bend_nom;

  // Static distortion comes from random misalignment kicks so it is a
  // physically shaped closed orbit.
  std::mt19937_64 pattern_rng(config_.seed * 0x9e3779b97f4a7c15ULL + 7);
  static_x_.assign(config_.n_bpm, 0.0);
  static_y_.assign(config_.n_bpm, 0.0);
  if (config_.static_orbit_rms > 0.0) {
    static_x_ = response_.r_x * random_pattern(pattern_rng, config_.n_corr, 1.0);
    static_y_ = response_.r_y * random_pattern(pattern_rng, config_.n_corr, 1.0);
    for (Vector* v : {&static_x_, &static_y_}) {
      double ss = 0.0;
      for (double x : *v) ss += x * x;
      const double scale = config_.static_orbit_rms / std::sqrt(ss / static_cast<double>(v->size()));
      for (double& x : *v) x *= scale;
    }
  }
  drift_shape_x_ = random_pattern(pattern_rng, config_.n_bpm, 1.0);
  drift_shape_y_ = random_pattern(pattern_rng, config_.n_bpm, 1.0);
  walk_x_.assign(config_.n_bpm, 0.0);
  walk_y_.assign(config_.n_bpm, 0.0);

  compute_outputs();
  define_channels();
}

void RingModel::define_channels() {
  using bus::ChannelAccess;
  namespace ch = channels;
  const double ts = timestamp();
  auto def = [&](const char* name, const ChannelMeta& meta, Value v) { bus_.define(name, meta, TimedValue(std::move(v), ts)); };

  def(ch::kCorX, ChannelMeta::vector(config_.n_corr, "mrad", true, "horizontal corrector kicks"), state_.kick_x);
  def(ch::kCorY, ChannelMeta::vector(config_.n_corr, "mrad", true, "vertical corrector kicks"), state_.kick_y);
  def(ch::kQuad, ChannelMeta::vector(config_.n_quad, "A", true, "quadrupole set currents"), state_.quad);
  def(ch::kSext, ChannelMeta::vector(config_.n_sext, "A", true, "sextupole set currents"), state_.sext);
  def(ch::kBend, ChannelMeta::vector(config_.n_bend, "A", true, "dipole set currents"), state_.bend);
  def(ch::kRfDeltaF, ChannelMeta::scalar("Hz", true, "RF frequency offset from nominal"), state_.rf_delta_f);

  def(ch::kCurrent, ChannelMeta::scalar("mA", false, "stored beam current"), state_.current);
  def(ch::kBpmX, ChannelMeta::vector(config_.n_bpm, "mm", false, "horizontal BPM readings"), state_.orbit_x);
  def(ch::kBpmY, ChannelMeta::vector(config_.n_bpm, "mm", false, "vertical BPM readings"), state_.orbit_y);
  def(ch::kTuneX, ChannelMeta::scalar("", false, "horizontal tune"), state_.tune_x);
  def(ch::kTuneY, ChannelMeta::scalar("", false, "vertical tune"), state_.tune_y);
  def(ch::kChromX, ChannelMeta::scalar("", false, "horizontal chromaticity"), state_.chrom_x);
  def(ch::kChromY, ChannelMeta::scalar("", false, "vertical chromaticity"), state_.chrom_y);
  const double tau = instantaneous_lifetime(state_.current, config_.tau_gas, config_.c_touschek);
  bus_.define(ch::kTrueLifetime, ChannelMeta::scalar("h", false, "model lifetime"),
              std::isfinite(tau) ? TimedValue(tau, ts) : TimedValue(0.0, ts, Status::Invalid));
}

double RingModel::momentum_deviation() const {
  return -(state_.rf_delta_f / config_.f0) / config_.alpha_c + config_.energy_drift * state_.t_sim;
}

void RingModel::read_setpoints() {
  namespace ch = channels;
  state_.kick_x = bus_.get(ch::kCorX).vector();
  state_.kick_y = bus_.get(ch::kCorY).vector();
  state_.quad = bus_.get(ch::kQuad).vector();
  state_.sext = bus_.get(ch::kSext).vector();
  state_.bend = bus_.get(ch::kBend).vector();
  state_.rf_delta_f = bus_.get(ch::kRfDeltaF).scalar();
}

void RingModel::advance_perturbation(double dt) {
  if (config_.walk_rms > 0.0) {
    const double sigma = config_.walk_rms * std::sqrt(dt / config_.dt);
    for (auto& w : walk_x_) w += sigma * unit_normal_(rng_);
    for (auto& w : walk_y_) w += sigma * unit_normal_(rng_);
  }
}

void RingModel::compute_outputs() {
  const std::size_t n = config_.n_bpm;
  const double phase = 2.0 * std::numbers::pi * state_.t_sim / config_.drift_period;
  const double drift = config_.drift_amplitude * std::sin(phase);
  state_.perturbation_x.resize(n);
  state_.perturbation_y.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    state_.perturbation_x[i] = static_x_[i] + drift * drift_shape_x_[i] + walk_x_[i];
    state_.perturbation_y[i] = static_y_[i] + drift * drift_shape_y_[i] + walk_y_[i];
  }

  const double delta = momentum_deviation();
  state_.orbit_x = response_.r_x * state_.kick_x;
  state_.orbit_y = response_.r_y * state_.kick_y;
  for (std::size_t i = 0; i < n; ++i) {
    state_.orbit_x[i] += 1000.0 * response_.eta[i] * delta + state_.perturbation_x[i];
    state_.orbit_y[i] += state_.perturbation_y[i];
  }
  if (config_.bpm_noise_rms > 0.0) {
    for (auto& x : state_.orbit_x) x += config_.bpm_noise_rms * unit_normal_(rng_);
    for (auto& y : state_.orbit_y) y += config_.bpm_noise_rms * unit_normal_(rng_);
  }

  Vector dq(state_.quad.size()), ds(state_.sext.size());
  for (std::size_t k = 0; k < dq.size(); ++k) dq[k] = state_.quad[k] - magnets_.i_quad_nom[k];
  for (std::size_t k = 0; k < ds.size(); ++k) ds[k] = state_.sext[k] - magnets_.i_sext_nom[k];
  const Vector dnu = magnets_.g_tune * dq;
  const Vector dxi = magnets_.g_chrom * ds;
  state_.tune_x = config_.nu_x + dnu[0];
  state_.tune_y = config_.nu_y + dnu[1];
  state_.chrom_x = config_.xi_x + dxi[0];
  state_.chrom_y = config_.xi_y + dxi[1];
}

void RingModel::publish_current() {
  const double ts = timestamp();
  bus_.put(channels::kCurrent, TimedValue(state_.current, ts));
  const double tau = instantaneous_lifetime(state_.current, config_.tau_gas, config_.c_touschek);
  bus_.put(channels::kTrueLifetime,
           std::isfinite(tau) ? TimedValue(tau, ts) : TimedValue(0.0, ts, Status::Invalid));
}

void RingModel::publish() {
  namespace ch = channels;
  const double ts = timestamp();
  bus_.put(ch::kBpmX, TimedValue(state_.orbit_x, ts));
  bus_.put(ch::kBpmY, TimedValue(state_.orbit_y, ts));
  bus_.put(ch::kTuneX, TimedValue(state_.tune_x, ts));
  bus_.put(ch::kTuneY, TimedValue(state_.tune_y, ts));
  bus_.put(ch::kChromX, TimedValue(state_.chrom_x, ts));
  bus_.put(ch::kChromY, TimedValue(state_.chrom_y, ts));
  publish_current();
}

void RingModel::step(double dt) {
  if (!(dt > 0.0)) throw Error(ErrorCode::InvalidArgument, "step needs dt > 0");
  std::lock_guard lock(mutex_);
  read_setpoints();
  state_.t_sim += dt;
  state_.current = decay_current(epoch_current_, state_.t_sim - epoch_time_, config_.tau_gas, config_.c_touschek);
  if (config_.topup_enabled && state_.current < config_.topup_threshold) {
    epoch_current_ = config_.topup_refill;
    epoch_time_ = state_.t_sim;
    state_.current = epoch_current_;
  }
  advance_perturbation(dt);
  compute_outputs();
  publish();
}

double RingModel::inject(double delta_i) {
  if (delta_i < 0.0 || !std::isfinite(delta_i))
    throw Error(ErrorCode::NegativeInjection, "injection must be >= 0 mA");
  std::lock_guard lock(mutex_);
  if (delta_i == 0.0) return state_.current;
  state_.current += delta_i;
  epoch_current_ = state_.current;
  epoch_time_ = state_.t_sim;
  publish_current();
  return state_.current;
}

void RingModel::set_top_up(bool enabled, double threshold, double refill_to) {
  if (!(threshold < refill_to)) throw Error(ErrorCode::BadThreshold, "top-up threshold must be below refill level");
  std::lock_guard lock(mutex_);
  config_.topup_enabled = enabled;
  if (enabled) {
    config_.topup_threshold = threshold;
    config_.topup_refill = refill_to;
  }
}

RingRunner::RingRunner(RingModel& model) : model_(model) {
  thread_ = std::thread([this] {
    using clock = std::chrono::steady_clock;
    const auto interval = std::chrono::duration_cast<clock::duration>(
        std::chrono::duration<double>(model_.config().dt / model_.config().speedup));
    auto next = clock::now() + interval;
    while (!stop_) {
      while (!stop_ && clock::now() < next)
        std::this_thread::sleep_for(std::min<clock::duration>(next - clock::now(), std::chrono::milliseconds(50)));
      if (stop_) break;
      try {
        model_.step();
      } catch (const std::exception&) {
        // next tick retries
      }
      next += interval;
    }
  });
}

RingRunner::~RingRunner() { stop(); }

void RingRunner::stop() {
  stop_ = true;
  if (thread_.joinable()) thread_.join();
}

}  // namespace ringd::ring

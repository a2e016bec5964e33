#include "ofb/feedback.hpp"

#include <chrono>
#include <cmath>

#include "common/error.hpp"
#include "ring/ring_model.hpp"

namespace ringd::ofb {

const char* mode_name(Mode mode) {
  switch (mode) {
    case Mode::Stopped: return "STOPPED";
    case Mode::Passive: return "PASSIVE";
    case Mode::Active: return "ACTIVE";
  }
  return "STOPPED";
}

std::optional<Mode> parse_mode(std::string_view text) {
  text = trim(text);
  if (text == "STOPPED") return Mode::Stopped;
  if (text == "PASSIVE") return Mode::Passive;
  if (text == "ACTIVE") return Mode::Active;
  return std::nullopt;
}

const char* outcome_name(Outcome outcome) {
  switch (outcome) {
    case Outcome::Stopped: return "stopped";
    case Outcome::NoNewData: return "no-new-data";
    case Outcome::Stale: return "stale";
    case Outcome::Invalid: return "invalid";
    case Outcome::Computed: return "computed";
    case Outcome::Applied: return "applied";
  }
  return "";
}

PlaneChannels PlaneChannels::horizontal() {
  PlaneChannels c;
  c.mode = "OFB:MODE";
  c.period = "OFB:PERIOD";
  c.sv_mask = "OFB:SV-MASK";
  c.f_step = "OFB:F-STEP";
  c.gain = "OFB:GAIN";
  c.ref_orbit = "OFB:REF-ORBIT";
  c.status = "OFB:STATUS";
  c.sv_values = "OFB:SV";
  c.kick_rms = "OFB-XRMS";
  c.kick_mean = "OFB-XMEAN";
  c.delta_f = "OFB-DF";
  c.orbit_rms = "OFB-ORBIT-RMS";
  c.iterations = "OFB-ITER";
  c.bpm = ring::channels::kBpmX;
  c.corrector = ring::channels::kCorX;
  c.rf = ring::channels::kRfDeltaF;
  return c;
}

PlaneChannels PlaneChannels::vertical() {
  PlaneChannels c;
  c.mode = "OFB-Y:MODE";
  c.period = "OFB-Y:PERIOD";
  c.sv_mask = "OFB-Y:SV-MASK";
  c.gain = "OFB-Y:GAIN";
  c.ref_orbit = "OFB-Y:REF-ORBIT";
  c.status = "OFB-Y:STATUS";
  c.sv_values = "OFB-Y:SV";
  c.kick_rms = "OFB-YRMS";
  c.kick_mean = "OFB-YMEAN";
  c.orbit_rms = "OFB-Y-ORBIT-RMS";
  c.iterations = "OFB-Y-ITER";
  c.bpm = ring::channels::kBpmY;
  c.corrector = ring::channels::kCorY;
  return c;
}

namespace {

double rms(const Vector& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s / static_cast<double>(v.size()));
}

double mean(const Vector& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double column_norm(const Matrix& m, std::size_t c) {
  double s = 0.0;
  for (std::size_t r = 0; r < m.rows(); ++r) s += m(r, c) * m(r, c);
  return std::sqrt(s);
}

}  // namespace

FeedbackService::FeedbackService(bus::ChannelAccess& access, const ring::ResponseModel& model, PlaneChannels names,
                                 FeedbackSettings settings)
    : bus_(access), names_(std::move(names)), settings_(settings) {
  if (!(settings_.period > 0.0)) throw Error(ErrorCode::InvalidArgument, "feedback period must be > 0");
  if (!(settings_.f_step > 0.0)) throw Error(ErrorCode::InvalidArgument, "frequency step must be > 0");
  if (!(settings_.gain > 0.0 && settings_.gain <= 1.0)) throw Error(ErrorCode::InvalidArgument, "gain must be in (0, 1]");
  mode_ = settings_.mode;
  period_ = settings_.period;
  f_step_ = settings_.f_step;
  gain_ = settings_.gain;
  build(model);
}

FeedbackService::~FeedbackService() { stop(); }

void FeedbackService::build(const ring::ResponseModel& model) {
  const bool horizontal = names_.has_frequency();
  Matrix r = horizontal ? model.r_x : model.r_y;
  if (r.rows() == 0 || r.cols() == 0) throw Error(ErrorCode::ShapeMismatch, "response model has no matrix for this plane");
  if (corrector_ && (r.rows() != response_.rows() || r.cols() != response_.cols()))
    throw Error(ErrorCode::ShapeMismatch, "a reloaded response must keep its dimensions");

  std::unique_ptr<SvdCorrector> corrector;
  Vector compensation;
  Vector freq;
  double weight = 1.0;
  if (horizontal) {
    freq = model.frequency_column();
    if (freq.size() != r.rows()) throw Error(ErrorCode::ShapeMismatch, "dispersion needs one entry per BPM");
    const double fnorm = linalg::norm2(freq);
    if (!(fnorm > 0.0)) throw Error(ErrorCode::InvalidArgument, "frequency column is zero");
    weight = settings_.rf_weight;
    if (weight <= 0.0) {
      double max_norm = 0.0;
      for (std::size_t c = 0; c < r.cols(); ++c) max_norm = std::max(max_norm, column_norm(r, c));
      weight = max_norm / fnorm;
    }
    Matrix ext(r.rows(), r.cols() + 1);
    for (std::size_t i = 0; i < r.rows(); ++i)
      for (std::size_t j = 0; j < r.cols(); ++j) ext(i, j) = r(i, j);
    ext.set_column(r.cols(), freq);
    Vector weights(r.cols() + 1, 1.0);
    weights.back() = weight;
    corrector = std::make_unique<SvdCorrector>(ext, weights);
    // Kicks that reproduce one Hz worth of orbit: pinv(R) * column.
    const SvdCorrector magnets_only(r);
    compensation = magnets_only.compute_correction(freq);
    for (double& k : compensation) k = -k;
  } else {
    corrector = std::make_unique<SvdCorrector>(r);
  }

  if (corrector_) {
    corrector->set_mask(corrector_->mask());
    corrector->set_reference(corrector_->reference());
  }
  response_ = std::move(r);
  freq_column_ = std::move(freq);
  corrector_ = std::move(corrector);
  quant_compensation_ = std::move(compensation);
  rf_weight_ = weight;
  if (kicks_.size() != response_.cols()) {
    kicks_.assign(response_.cols(), 0.0);
    written_kicks_.assign(response_.cols(), 0.0);
  }
}

void FeedbackService::define_channels() {
  const std::size_t n_sv = corrector_->cols();
  const std::size_t n_bpm = response_.rows();
  bus_.define(names_.mode, ChannelMeta::text(true, "feedback mode: STOPPED, PASSIVE or ACTIVE"),
              TimedValue(std::string(mode_name(mode_))));
  bus_.define(names_.period, ChannelMeta::scalar("s", true, "feedback loop period"), TimedValue(period_));
  bus_.define(names_.sv_mask, ChannelMeta::vector(n_sv, "", true, "singular value enable mask (0/1)"),
              TimedValue(Vector(n_sv, 1.0)));
  if (names_.has_frequency())
    bus_.define(names_.f_step, ChannelMeta::scalar("Hz", true, "minimum RF frequency step"), TimedValue(f_step_));
  bus_.define(names_.gain, ChannelMeta::scalar("", true, "feedback gain"), TimedValue(gain_));
  bus_.define(names_.ref_orbit, ChannelMeta::vector(n_bpm, "mm", true, "reference orbit"),
              TimedValue(Vector(n_bpm, 0.0)));

  bus_.define(names_.status, ChannelMeta::text(false, "feedback status"), TimedValue(std::string("idle")));
  bus_.define(names_.sv_values, ChannelMeta::vector(n_sv, "", false, "singular values of the weighted response"),
              TimedValue(corrector_->singular_values()));
  bus_.put(names_.sv_values, TimedValue(corrector_->singular_values()));
  const TimedValue none(0.0, kAssignTimestamp, Status::Invalid);
  bus_.define(names_.kick_rms, ChannelMeta::scalar("mrad", false, "rms of accumulated corrector kicks"), none);
  bus_.define(names_.kick_mean, ChannelMeta::scalar("mrad", false, "mean of accumulated corrector kicks"), none);
  if (names_.has_frequency())
    bus_.define(names_.delta_f, ChannelMeta::scalar("Hz", false, "applied RF frequency change"), TimedValue(0.0));
  bus_.define(names_.orbit_rms, ChannelMeta::scalar("mm", false, "rms orbit error seen by the feedback"), none);
  bus_.define(names_.iterations, ChannelMeta::scalar("", false, "feedback iterations"), TimedValue(0.0));
}

void FeedbackService::start() {
  {
    std::lock_guard lock(mutex_);
    define_channels();
    if (names_.has_frequency()) base_df_ = bus_.get(names_.rf).scalar() - written_df_;
    status_.clear();
  }
  if (settings_.run_loop && !loop_.joinable()) {
    stop_ = false;
    loop_ = std::thread([this] { run_loop(); });
  }
}

void FeedbackService::stop() {
  {
    std::lock_guard lock(loop_mutex_);
    stop_ = true;
  }
  loop_cv_.notify_all();
  if (loop_.joinable()) loop_.join();
}

void FeedbackService::run_loop() {
  while (!stop_) {
    try {
      iterate(wall_clock_now());
    } catch (const Error&) {
      // connection trouble; the supervisor replaces the service if the link is gone
    }
    const double wait = period();
    std::unique_lock lock(loop_mutex_);
    loop_cv_.wait_for(lock, std::chrono::duration<double>(wait), [this] { return stop_.load(); });
  }
}

void FeedbackService::set_status(const std::string& text) {
  if (text == status_) return;
  status_ = text;
  bus_.put(names_.status, TimedValue(text));
}

void FeedbackService::absorb_controls() {
  std::string problem;
  if (const auto m = parse_mode(bus_.get(names_.mode).text())) mode_ = *m;
  else problem = "bad mode value";

  const double period = bus_.get(names_.period).scalar();
  if (period > 0.0 && std::isfinite(period)) period_ = period;
  else problem = "period must be > 0";

  const double gain = bus_.get(names_.gain).scalar();
  if (gain > 0.0 && gain <= 1.0) gain_ = gain;
  else problem = "gain must be in (0, 1]";

  if (names_.has_frequency()) {
    const double step = bus_.get(names_.f_step).scalar();
    if (!(step > 0.0 && std::isfinite(step))) {
      problem = "frequency step must be > 0";
    } else if (step != f_step_) {
      f_step_ = step;
      df_ = quantize_frequency(df_, 0.0, f_step_);
    }
  }

  try {
    corrector_->set_mask(bus_.get(names_.sv_mask).vector());
  } catch (const Error& e) {
    if (e.code() != ErrorCode::BadMask) throw;
    problem = e.what();
  }
  corrector_->set_reference(bus_.get(names_.ref_orbit).vector());
  if (!problem.empty()) set_status("config rejected: " + problem);
}

void FeedbackService::publish_invalid(const std::string& why) {
  const auto bad = [](double v) { return TimedValue(v, kAssignTimestamp, Status::Invalid); };
  bus_.put(names_.kick_rms, bad(rms(kicks_)));
  bus_.put(names_.kick_mean, bad(mean(kicks_)));
  if (names_.has_frequency()) bus_.put(names_.delta_f, bad(df_));
  bus_.put(names_.orbit_rms, bad(0.0));
  set_status(why);
}

Outcome FeedbackService::iterate(double now) {
  std::lock_guard lock(mutex_);
  absorb_controls();
  if (mode_ == Mode::Stopped) {
    set_status("stopped");
    return Outcome::Stopped;
  }

  const TimedValue bpm = bus_.get(names_.bpm);
  if (!bpm.ok()) {
    publish_invalid("BPM data invalid");
    return Outcome::Invalid;
  }
  if (bpm.timestamp == last_bpm_ts_) return Outcome::NoNewData;
  if (now - bpm.timestamp > 3.0 * period_) {
    publish_invalid("stale BPM data");
    return Outcome::Stale;
  }
  const Vector x = bpm.vector();
  if (x.size() != response_.rows()) throw Error(ErrorCode::ShapeMismatch, "BPM vector does not match the response");
  last_bpm_ts_ = bpm.timestamp;

  // Orbit without anything this feedback has put on the machine.
  Vector x0 = x;
  const Vector own = response_ * written_kicks_;
  for (std::size_t i = 0; i < x0.size(); ++i) {
    x0[i] -= own[i];
    if (names_.has_frequency()) x0[i] -= freq_column_[i] * written_df_;
  }

  Vector c;
  try {
    c = corrector_->compute_correction(x0);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::AllDisabled) throw;
    publish_invalid("all singular values disabled");
    return Outcome::Invalid;
  }

  const std::size_t n = response_.cols();
  Vector target(c.begin(), c.begin() + static_cast<std::ptrdiff_t>(n));
  double df_new = df_;
  if (names_.has_frequency()) {
    df_new = quantize_frequency(df_ + gain_ * (c[n] - df_), df_, f_step_);
    const double left_over = c[n] - df_new;
    for (std::size_t j = 0; j < n; ++j) target[j] += quant_compensation_[j] * left_over;
  }
  for (std::size_t j = 0; j < n; ++j) kicks_[j] += gain_ * (target[j] - kicks_[j]);
  df_ = df_new;

  const bool active = mode_ == Mode::Active;
  if (active) {
    Vector setpoint = bus_.get(names_.corrector).vector();
    if (setpoint.size() != n) throw Error(ErrorCode::ShapeMismatch, "corrector vector does not match the response");
    for (std::size_t j = 0; j < n; ++j) setpoint[j] += kicks_[j] - written_kicks_[j];
    bus_.put(names_.corrector, TimedValue(setpoint));
    written_kicks_ = kicks_;
    if (names_.has_frequency()) {
      bus_.put(names_.rf, TimedValue(base_df_ + df_));
      written_df_ = df_;
    }
  }

  ++iterations_;
  Vector err(x.size());
  const Vector& ref = corrector_->reference();
  for (std::size_t i = 0; i < x.size(); ++i) err[i] = x[i] - ref[i];
  bus_.put(names_.kick_rms, TimedValue(rms(kicks_)));
  bus_.put(names_.kick_mean, TimedValue(mean(kicks_)));
  if (names_.has_frequency()) bus_.put(names_.delta_f, TimedValue(df_));
  bus_.put(names_.orbit_rms, TimedValue(rms(err)));
  bus_.put(names_.iterations, TimedValue(static_cast<double>(iterations_)));
  set_status(active ? "active" : "passive");
  return active ? Outcome::Applied : Outcome::Computed;
}

void FeedbackService::set_mode(Mode mode) { bus_.put(names_.mode, TimedValue(std::string(mode_name(mode)))); }

void FeedbackService::set_mask(const Vector& mask) {
  {
    std::lock_guard lock(mutex_);
    SvdCorrector probe = *corrector_;
    probe.set_mask(mask);
  }
  bus_.put(names_.sv_mask, TimedValue(mask));
}

void FeedbackService::set_gain(double gain) {
  if (!(gain > 0.0 && gain <= 1.0)) throw Error(ErrorCode::InvalidArgument, "gain must be in (0, 1]");
  bus_.put(names_.gain, TimedValue(gain));
}

void FeedbackService::set_f_step(double step) {
  if (!names_.has_frequency()) throw Error(ErrorCode::InvalidArgument, "this plane has no frequency corrector");
  if (!(step > 0.0)) throw Error(ErrorCode::InvalidArgument, "frequency step must be > 0");
  bus_.put(names_.f_step, TimedValue(step));
}

void FeedbackService::set_period(double period) {
  if (!(period > 0.0)) throw Error(ErrorCode::InvalidArgument, "feedback period must be > 0");
  bus_.put(names_.period, TimedValue(period));
  loop_cv_.notify_all();
}

void FeedbackService::set_reference(const Vector& reference) {
  if (reference.size() != response_.rows()) throw Error(ErrorCode::ShapeMismatch, "reference orbit has the wrong length");
  bus_.put(names_.ref_orbit, TimedValue(reference));
}

void FeedbackService::load_response(const ring::ResponseModel& model) {
  std::lock_guard lock(mutex_);
  Mode current = mode_;
  try {
    if (const auto m = parse_mode(bus_.get(names_.mode).text())) current = *m;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::UnknownChannel) throw;
  }
  if (current != Mode::Stopped)
    throw Error(ErrorCode::BadTransition, "the response matrix can only be replaced while STOPPED");
  build(model);
  try {
    bus_.put(names_.sv_values, TimedValue(corrector_->singular_values()));
  } catch (const Error& e) {
    if (e.code() != ErrorCode::UnknownChannel) throw;
  }
}

Mode FeedbackService::mode() const {
  std::lock_guard lock(mutex_);
  return mode_;
}

double FeedbackService::period() const {
  std::lock_guard lock(mutex_);
  return period_;
}

Vector FeedbackService::kicks() const {
  std::lock_guard lock(mutex_);
  return kicks_;
}

double FeedbackService::delta_f() const {
  std::lock_guard lock(mutex_);
  return df_;
}

std::uint64_t FeedbackService::iterations() const {
  std::lock_guard lock(mutex_);
  return iterations_;
}

double FeedbackService::rf_weight() const {
  std::lock_guard lock(mutex_);
  return rf_weight_;
}

SvdCorrector FeedbackService::corrector() const {
  std::lock_guard lock(mutex_);
  return *corrector_;
}

}  // namespace ringd::ofb

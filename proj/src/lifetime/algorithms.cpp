#include "lifetime/algorithms.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "common/error.hpp"

namespace ringd::lifetime {

namespace {

constexpr double kSecondsPerHour = 3600.0;

void require(std::span<const Sample> w, std::size_t n, const char* who) {
  if (w.size() < n)
    throw Error(ErrorCode::InsufficientData,
                std::string(who) + " needs at least " + std::to_string(n) + " samples");
}

LifetimeResult from_seconds(double tau_s, Algorithm a) {
  if (!std::isfinite(tau_s) || tau_s <= 0.0) return {0.0, false, a};
  return {tau_s / kSecondsPerHour, true, a};
}

struct LineFit {
  double slope = 0.0;
  double mean_t = 0.0;
  double mean_y = 0.0;
};

LineFit fit_log_line(std::span<const Sample> w) {
  LineFit f;
  const double n = static_cast<double>(w.size());
  for (const auto& s : w) {
    f.mean_t += s.t;
    f.mean_y += std::log(s.current);
  }
  f.mean_t /= n;
  f.mean_y /= n;
  double sxy = 0.0, sxx = 0.0;
  for (const auto& s : w) {
    const double dt = s.t - f.mean_t;
    sxy += dt * (std::log(s.current) - f.mean_y);
    sxx += dt * dt;
  }
  f.slope = sxx > 0.0 ? sxy / sxx : 0.0;
  return f;
}

}  // namespace

SampleWindow::SampleWindow(std::size_t capacity) : capacity_(std::max<std::size_t>(capacity, 1)) {}

bool SampleWindow::push(Sample s) {
  if (!samples_.empty() && !(s.t > samples_.back().t)) return false;
  samples_.push_back(s);
  while (samples_.size() > capacity_) samples_.pop_front();
  return true;
}

void SampleWindow::set_capacity(std::size_t capacity) {
  capacity_ = std::max<std::size_t>(capacity, 1);
  while (samples_.size() > capacity_) samples_.pop_front();
}

double SampleWindow::rms_step() const {
  if (samples_.size() < 2) return 0.0;
  double ss = 0.0;
  for (std::size_t i = 1; i < samples_.size(); ++i) {
    const double d = samples_[i].current - samples_[i - 1].current;
    ss += d * d;
  }
  return std::sqrt(ss / static_cast<double>(samples_.size() - 1));
}

LifetimeResult lt_twopoint(std::span<const Sample> w) {
  require(w, 2, "two-point lifetime");
  const auto& first = w.front();
  const auto& last = w.back();
  if (last.current >= first.current || last.current <= 0.0) return {0.0, false, Algorithm::TwoPoint};
  return from_seconds(-last.current * (last.t - first.t) / (last.current - first.current), Algorithm::TwoPoint);
}

LifetimeResult lt_logfit(std::span<const Sample> w) {
  require(w, 3, "log-fit lifetime");
  for (const auto& s : w)
    if (!(s.current > 0.0)) throw Error(ErrorCode::NonPositiveCurrent, "log fit needs positive currents");
  const auto fit = fit_log_line(w);
  if (!(fit.slope < 0.0)) return {0.0, false, Algorithm::LogFit};
  return from_seconds(-1.0 / fit.slope, Algorithm::LogFit);
}

LifetimeResult lt_expfit(std::span<const Sample> w) {
  require(w, 3, "exponential-fit lifetime");
  for (const auto& s : w)
    if (!(s.current > 0.0)) return {0.0, false, Algorithm::ExpFit};

  // Model I = a exp(-k (t - t_mean)); centering keeps the normal equations
  // well conditioned and makes the fit invariant to time shifts.
  const auto init = fit_log_line(w);
  double k = -init.slope;
  double a = std::exp(init.mean_y);
  if (!(k > 0.0)) return {0.0, false, Algorithm::ExpFit};

  constexpr int kMaxIterations = 25;
  constexpr double kTolerance = 1e-10;
  for (int iter = 0; iter < kMaxIterations; ++iter) {
    double j11 = 0.0, j12 = 0.0, j22 = 0.0, g1 = 0.0, g2 = 0.0;
    for (const auto& s : w) {
      const double tau = s.t - init.mean_t;
      const double e = std::exp(-k * tau);
      const double r = s.current - a * e;
      const double da = e;
      const double dk = -a * tau * e;
      j11 += da * da;
      j12 += da * dk;
      j22 += dk * dk;
      g1 += da * r;
      g2 += dk * r;
    }
    const double det = j11 * j22 - j12 * j12;
    if (!(det > 0.0) || !std::isfinite(det)) return {0.0, false, Algorithm::ExpFit};
    const double step_a = (j22 * g1 - j12 * g2) / det;
    const double step_k = (j11 * g2 - j12 * g1) / det;
    const double k_new = k + step_k;
    if (!(k_new > 0.0)) return {0.0, false, Algorithm::ExpFit};
    // |d tau| / tau with tau = 1/k.
    const double rel = std::abs(1.0 / k_new - 1.0 / k) * k;
    a += step_a;
    k = k_new;
    if (rel < kTolerance) return from_seconds(1.0 / k, Algorithm::ExpFit);
  }
  return {0.0, false, Algorithm::ExpFit};
}

LifetimeResult lt_medfilt(std::span<const Sample> w) {
  require(w, 5, "median-filtered lifetime");
  std::vector<double> taus;
  taus.reserve(w.size() - 1);
  for (std::size_t i = 1; i < w.size(); ++i) {
    const double di = w[i].current - w[i - 1].current;
    const double mean_i = 0.5 * (w[i].current + w[i - 1].current);
    const double dt = w[i].t - w[i - 1].t;
    taus.push_back(di == 0.0 ? std::numeric_limits<double>::infinity() : -mean_i * dt / di);
  }
  std::sort(taus.begin(), taus.end());
  const std::size_t n = taus.size();
  const double median = n % 2 ? taus[n / 2] : 0.5 * (taus[n / 2 - 1] + taus[n / 2]);
  return from_seconds(median, Algorithm::MedFilt);
}

LifetimeResult evaluate(Algorithm algorithm, std::span<const Sample> window) {
  switch (algorithm) {
    case Algorithm::TwoPoint: return lt_twopoint(window);
    case Algorithm::LogFit: return lt_logfit(window);
    case Algorithm::ExpFit: return lt_expfit(window);
    case Algorithm::MedFilt: return lt_medfilt(window);
  }
  return {};
}

const char* algorithm_name(Algorithm algorithm) {
  switch (algorithm) {
    case Algorithm::TwoPoint: return "TWOPOINT";
    case Algorithm::LogFit: return "LOGFIT";
    case Algorithm::ExpFit: return "EXPFIT";
    case Algorithm::MedFilt: return "MEDFILT";
  }
  return "?";
}

}  // namespace ringd::lifetime

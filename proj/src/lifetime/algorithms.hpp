#pragma once

#include <cstddef>
#include <deque>
#include <span>
#include <vector>

namespace ringd::lifetime {

struct Sample {
  double t;        // s
  double current;  // mA
};

enum class Algorithm { TwoPoint, LogFit, ExpFit, MedFilt };

struct LifetimeResult {
  double tau = 0.0;  // h
  bool valid = false;
  Algorithm algorithm = Algorithm::TwoPoint;
};

// Ring buffer of the most recent samples with strictly increasing times.
class SampleWindow {
 public:
  explicit SampleWindow(std::size_t capacity = 30);

  // Rejects (returns false) a sample not later than the newest one.
  bool push(Sample s);
  void clear() { samples_.clear(); }
  void set_capacity(std::size_t capacity);

  std::size_t capacity() const noexcept { return capacity_; }
  std::size_t size() const noexcept { return samples_.size(); }
  bool empty() const noexcept { return samples_.empty(); }
  const Sample& back() const { return samples_.back(); }
  std::vector<Sample> samples() const { return {samples_.begin(), samples_.end()}; }

  // RMS of successive current differences; 0 with fewer than two samples.
  double rms_step() const;

 private:
  std::size_t capacity_;
  std::deque<Sample> samples_;
};

// tau = -I_last (t_last - t_first) / (I_last - I_first). Needs 2 samples.
LifetimeResult lt_twopoint(std::span<const Sample> window);
// Least-squares line through ln I(t); tau = -1/slope. Needs 3 samples, I > 0.
LifetimeResult lt_logfit(std::span<const Sample> window);
// Gauss-Newton fit of I0 exp(-t/tau), started from the log fit.
LifetimeResult lt_expfit(std::span<const Sample> window);
// Median of per-pair estimates -mean(I) dt / dI. Needs 5 samples.
LifetimeResult lt_medfilt(std::span<const Sample> window);

LifetimeResult evaluate(Algorithm algorithm, std::span<const Sample> window);
const char* algorithm_name(Algorithm algorithm);

}  // namespace ringd::lifetime

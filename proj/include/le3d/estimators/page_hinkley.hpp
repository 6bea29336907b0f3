#pragma once

#include <cstdint>

#include "le3d/estimators/snapshot.hpp"

namespace le3d {

struct PageHinkleyConfig {
  int min_instances = 30;
  double delta = 0.005;
  double lambda = 50.0;
  double alpha = 0.9999;

  void validate() const;
};

/// Two-sided Page-Hinkley test with a forgetting factor.
///
/// The upward statistic accumulates (x - mean - delta) and alarms when it
/// rises more than lambda above its running minimum. The downward statistic
/// accumulates (x - mean + delta) and alarms when it falls more than lambda
/// below its running maximum. State is reset after an alarm.
class PageHinkley {
 public:
  explicit PageHinkley(PageHinkleyConfig config = {});

  /// Throws InputError for non-finite values.
  bool update(double value);

  std::uint64_t samples_seen() const noexcept { return samples_seen_; }
  double running_mean() const noexcept { return mean_; }
  double sum_up() const noexcept { return sum_up_; }
  double running_min() const noexcept { return min_up_; }
  double sum_down() const noexcept { return sum_down_; }
  double running_max() const noexcept { return max_down_; }

  const PageHinkleyConfig& config() const noexcept { return config_; }
  Snapshot snapshot() const;

 private:
  void reset();

  PageHinkleyConfig config_;
  std::uint64_t samples_seen_ = 0;
  double mean_ = 0.0;
  double sum_up_ = 0.0;
  double min_up_ = 0.0;
  double sum_down_ = 0.0;
  double max_down_ = 0.0;
};

}  // namespace le3d

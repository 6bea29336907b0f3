#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <vector>

#include "le3d/estimators/snapshot.hpp"

namespace le3d {

struct AdwinConfig {
  double delta = 0.002;
  int max_buckets_per_class = 5;

  void validate() const;
};

/// ADaptive WINdowing over an exponential histogram.
///
/// Buckets of capacity class i hold 2^i samples; each class keeps at most
/// `max_buckets_per_class` buckets, so memory is logarithmic in the window
/// length. Every update tests each bucket boundary as a split W0|W1 (W0 the
/// older part) and drops the oldest bucket while any split satisfies
///
///   |mean(W0) - mean(W1)| >= sqrt((1/n0 + 1/n1) / 4 * ln(4 n / delta))
///
/// where n is the current window length.
class Adwin {
 public:
  struct Bucket {
    double sum = 0.0;
    double m2 = 0.0;  // sum of squared deviations from the bucket mean
  };

  explicit Adwin(AdwinConfig config = {});

  /// Adds one sample. Returns true when a change was detected and the
  /// window shrunk. Throws InputError for non-finite values.
  bool update(double value);

  std::uint64_t width() const noexcept { return total_count_; }
  double total() const noexcept { return total_sum_; }
  double mean() const noexcept;
  double variance() const noexcept;
  std::size_t bucket_count() const noexcept;

  /// Bucket sizes ordered oldest first.
  std::vector<std::uint64_t> bucket_sizes() const;

  const AdwinConfig& config() const noexcept { return config_; }
  Snapshot snapshot() const;

  /// Cut threshold for a split of the current window.
  static double cut_threshold(std::uint64_t n0, std::uint64_t n1, std::uint64_t total, double delta);

 private:
  void insert(double value);
  void compress();
  bool detect_cut() const;
  void drop_oldest();

  AdwinConfig config_;
  // rows_[i] holds buckets of size 2^i, newest at the front.
  std::vector<std::deque<Bucket>> rows_;
  std::uint64_t total_count_ = 0;
  double total_sum_ = 0.0;
  double total_m2_ = 0.0;
};

}  // namespace le3d

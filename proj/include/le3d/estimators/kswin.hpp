#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <vector>

#include "le3d/estimators/ks.hpp"
#include "le3d/estimators/snapshot.hpp"
#include "le3d/random.hpp"

namespace le3d {

struct KswinConfig {
  int window_size = 100;
  int stat_size = 30;
  double alpha = 0.005;
  std::uint64_t seed = 42;

  void validate() const;
};

/// Kolmogorov-Smirnov windowing.
///
/// Once the window is full, the newest `stat_size` values are compared with
/// `stat_size` values drawn without replacement from the older part of the
/// window. A p-value at or below alpha is a change; the window then keeps
/// only the recent slice.
class Kswin {
 public:
  struct Step {
    bool flagged = false;
    std::optional<KsResult> last_test;
  };

  explicit Kswin(KswinConfig config = {});

  /// Throws InputError for non-finite values.
  Step step(double value);
  bool update(double value) { return step(value).flagged; }

  std::size_t size() const noexcept { return window_.size(); }
  const std::deque<double>& window() const noexcept { return window_; }
  const KswinConfig& config() const noexcept { return config_; }
  Snapshot snapshot() const;

 private:
  KswinConfig config_;
  std::deque<double> window_;
  Rng rng_;
  std::vector<std::size_t> scratch_;
};

}  // namespace le3d

#pragma once

#include <string>

namespace le3d {

/// Stateless band check; both bounds are inclusive.
class StaticThreshold {
 public:
  struct Config {
    double low = 0.0;
    double high = 0.0;
  };

  explicit StaticThreshold(Config config);

  bool update(double value) const noexcept { return value < config_.low || value > config_.high; }
  const Config& config() const noexcept { return config_; }

 private:
  Config config_;
};

}  // namespace le3d

#include "le3d/estimators/page_hinkley.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "le3d/error.hpp"

namespace le3d {

void PageHinkleyConfig::validate() const {
  if (min_instances < 1) throw ConfigError("pht.min_instances must be positive");
  if (!(delta >= 0.0) || !std::isfinite(delta)) throw ConfigError("pht.delta must be >= 0");
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ConfigError("pht.lambda must be > 0");
  if (!(alpha > 0.0 && alpha <= 1.0)) {
    throw ConfigError("pht.alpha must be in (0,1], got " + std::to_string(alpha));
  }
}

PageHinkley::PageHinkley(PageHinkleyConfig config) : config_(config) { config_.validate(); }

void PageHinkley::reset() {
  samples_seen_ = 0;
  mean_ = sum_up_ = min_up_ = sum_down_ = max_down_ = 0.0;
}

bool PageHinkley::update(double value) {
  if (!std::isfinite(value)) throw InputError("pht: value must be finite");
  ++samples_seen_;
  mean_ += (value - mean_) / static_cast<double>(samples_seen_);
  const double dev = value - mean_;
  sum_up_ = config_.alpha * sum_up_ + dev - config_.delta;
  sum_down_ = config_.alpha * sum_down_ + dev + config_.delta;
  if (samples_seen_ == 1) {
    min_up_ = sum_up_;
    max_down_ = sum_down_;
  } else {
    min_up_ = std::min(min_up_, sum_up_);
    max_down_ = std::max(max_down_, sum_down_);
  }
  if (samples_seen_ < static_cast<std::uint64_t>(config_.min_instances)) return false;
  const bool up = sum_up_ - min_up_ > config_.lambda;
  const bool down = max_down_ - sum_down_ > config_.lambda;
  if (up || down) {
    reset();
    return true;
  }
  return false;
}

Snapshot PageHinkley::snapshot() const {
  ByteWriter w;
  w.put(config_.min_instances).put(config_.delta).put(config_.lambda).put(config_.alpha);
  w.put(samples_seen_).put(mean_).put(sum_up_).put(min_up_).put(sum_down_).put(max_down_);
  return {1, w.take()};
}

}  // namespace le3d

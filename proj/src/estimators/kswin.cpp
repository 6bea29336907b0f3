#include "le3d/estimators/kswin.hpp"

#include <cmath>
#include <numeric>

#include "le3d/error.hpp"

namespace le3d {

void KswinConfig::validate() const {
  if (window_size < 2) throw ConfigError("kswin.window_size must be at least 2");
  if (stat_size < 1 || stat_size >= window_size) {
    throw ConfigError("kswin.stat_size must be positive and smaller than window_size");
  }
  if (window_size - stat_size < stat_size) {
    throw ConfigError("kswin.window_size must be at least twice stat_size");
  }
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("kswin.alpha must be in (0,1)");
}

Kswin::Kswin(KswinConfig config) : config_(config), rng_(config.seed) { config_.validate(); }

Kswin::Step Kswin::step(double value) {
  if (!std::isfinite(value)) throw InputError("kswin: value must be finite");
  const auto capacity = static_cast<std::size_t>(config_.window_size);
  const auto stat = static_cast<std::size_t>(config_.stat_size);
  if (window_.size() == capacity) window_.pop_front();
  window_.push_back(value);
  if (window_.size() < capacity) return {};

  const std::size_t older = capacity - stat;
  scratch_.resize(older);
  std::iota(scratch_.begin(), scratch_.end(), std::size_t{0});
  std::vector<double> reference(stat);
  for (std::size_t k = 0; k < stat; ++k) {
    const std::size_t pick = k + static_cast<std::size_t>(rng_.below(older - k));
    std::swap(scratch_[k], scratch_[pick]);
    reference[k] = window_[scratch_[k]];
  }
  std::vector<double> recent(window_.end() - static_cast<std::ptrdiff_t>(stat), window_.end());

  Step out;
  out.last_test = ks_two_sample(recent, reference);
  if (out.last_test->p_value <= config_.alpha) {
    out.flagged = true;
    window_.assign(recent.begin(), recent.end());
  }
  return out;
}

Snapshot Kswin::snapshot() const {
  ByteWriter w;
  w.put(config_.window_size).put(config_.stat_size).put(config_.alpha).put(config_.seed);
  w.put(static_cast<std::uint32_t>(window_.size()));
  for (double v : window_) w.put(v);
  return {1, w.take()};
}

}  // namespace le3d

#pragma once

#include <cstdint>
#include <random>

namespace le3d {

/// Seeded generator with portable uniform/normal draws.
///
/// The standard distributions are implementation-defined, so the draws here
/// are computed directly from the 64-bit engine output. Runs with the same
/// seed produce identical sequences on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Unbiased uniform integer in [0, bound).
  std::uint64_t below(std::uint64_t bound);

  /// Standard normal draw (Box-Muller, cached pair).
  double normal();

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace le3d

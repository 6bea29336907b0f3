#include <array>
#include <cmath>
#include <string>

#include "le3d/aggregator/types.hpp"
#include "le3d/datagen/types.hpp"
#include "le3d/error.hpp"

namespace le3d {
namespace {

template <class E, std::size_t N>
E parse_enum(std::string_view s, const std::array<std::string_view, N>& names, const char* what) {
  for (std::size_t i = 0; i < N; ++i) {
    if (names[i] == s) return static_cast<E>(i);
  }
  throw InputError(std::string("unknown ") + what + " '" + std::string(s) + "'");
}

constexpr std::array<std::string_view, 3> kClassNames = {"none", "natural", "abnormal"};
constexpr std::array<std::string_view, 2> kNoiseNames = {"gaussian", "uniform_jitter"};
constexpr std::array<std::string_view, 4> kDriftNames = {"step", "ramp", "stuck_at", "noise_scale"};
constexpr std::array<std::string_view, 2> kScopeNames = {"single", "all_of_type"};

}  // namespace

std::string_view to_string(DriftClassKind k) noexcept { return kClassNames[static_cast<std::size_t>(k)]; }
DriftClassKind parse_drift_class(std::string_view s) {
  return parse_enum<DriftClassKind>(s, kClassNames, "drift class");
}

std::string_view to_string(NoiseModel m) noexcept { return kNoiseNames[static_cast<std::size_t>(m)]; }
std::string_view to_string(DriftKind k) noexcept { return kDriftNames[static_cast<std::size_t>(k)]; }
std::string_view to_string(DriftScope s) noexcept { return kScopeNames[static_cast<std::size_t>(s)]; }

NoiseModel parse_noise_model(std::string_view s) { return parse_enum<NoiseModel>(s, kNoiseNames, "noise model"); }
DriftKind parse_drift_kind(std::string_view s) { return parse_enum<DriftKind>(s, kDriftNames, "drift kind"); }
DriftScope parse_drift_scope(std::string_view s) { return parse_enum<DriftScope>(s, kScopeNames, "drift scope"); }

void StreamProfile::validate() const {
  if (!std::isfinite(mean)) throw ConfigError("profile.mean must be finite");
  if (!(stddev >= 0.0) || !std::isfinite(stddev)) throw ConfigError("profile.stddev must be >= 0");
  if (sample_period_ms < 1) throw ConfigError("profile.sample_period_ms must be >= 1");
}

}  // namespace le3d

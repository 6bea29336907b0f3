#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "le3d/detector/types.hpp"

namespace le3d {

enum class NoiseModel { Gaussian, UniformJitter };

struct StreamProfile {
  double mean = 0.0;
  double stddev = 0.0;
  std::int64_t sample_period_ms = 1000;
  NoiseModel noise_model = NoiseModel::Gaussian;
  std::uint64_t seed = 0;
  std::string sensor_type = "generic";
  std::string unit;

  void validate() const;
  friend bool operator==(const StreamProfile&, const StreamProfile&) = default;
};

enum class DriftKind { Step, Ramp, StuckAt, NoiseScale };
enum class DriftScope { Single, AllOfType };

/// Operator-issued drift injection.
///
/// `target` is a stream id for scope Single and a sensor type for AllOfType.
struct DriftCommand {
  std::string target;
  DriftKind kind = DriftKind::Step;
  double magnitude = 0.0;
  std::int64_t duration_ms = 0;  // 0 = permanent
  TimestampMs issued_at = 0;
  DriftScope scope = DriftScope::Single;

  friend bool operator==(const DriftCommand&, const DriftCommand&) = default;
};

/// Emulator response to a command, published on the control-ack topic.
struct CommandAck {
  std::string stream_id;
  std::string target;
  DriftKind kind = DriftKind::Step;
  bool accepted = false;
  std::string reason;
  TimestampMs acked_at = 0;

  friend bool operator==(const CommandAck&, const CommandAck&) = default;
};

std::string_view to_string(NoiseModel m) noexcept;
std::string_view to_string(DriftKind k) noexcept;
std::string_view to_string(DriftScope s) noexcept;
NoiseModel parse_noise_model(std::string_view s);
DriftKind parse_drift_kind(std::string_view s);
DriftScope parse_drift_scope(std::string_view s);

}  // namespace le3d

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "le3d/detector/types.hpp"

namespace le3d {

/// The only thing aggregators exchange: decision, endpoint metadata and the
/// one-sample K-S summary.
struct AggregateShare {
  std::string origin_detector_id;
  std::string origin_aggregator_id;
  std::string stream_id;
  std::string sensor_type;
  std::string site;
  bool drifting = false;
  TimestampMs decided_at = 0;
  KsResult ks;
  std::uint64_t share_seq = 0;

  friend bool operator==(const AggregateShare&, const AggregateShare&) = default;
};

enum class DriftClassKind { None, Natural, Abnormal };

std::string_view to_string(DriftClassKind kind) noexcept;
DriftClassKind parse_drift_class(std::string_view name);

struct DriftClass {
  DriftClassKind kind = DriftClassKind::None;
  std::uint32_t concurrent_peers = 0;
  std::int64_t window_ms = 0;
  std::vector<std::string> contributing_streams;

  friend bool operator==(const DriftClass&, const DriftClass&) = default;
};

/// Classification as published on the class topic.
struct ClassReport {
  std::string aggregator_id;
  std::string site;
  std::string stream_id;
  TimestampMs evaluated_at = 0;
  DriftClass drift_class;

  friend bool operator==(const ClassReport&, const ClassReport&) = default;
};

}  // namespace le3d

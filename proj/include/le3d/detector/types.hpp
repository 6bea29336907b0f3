#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "le3d/estimators/estimator.hpp"
#include "le3d/estimators/ks.hpp"

namespace le3d {

using TimestampMs = std::int64_t;

struct SampleMetadata {
  std::string sensor_type;
  std::string unit;
  std::map<std::string, std::string> extra;

  friend bool operator==(const SampleMetadata&, const SampleMetadata&) = default;
};

/// One timestamped scalar reading from one sensor stream.
struct Sample {
  std::string stream_id;
  std::string site;
  TimestampMs timestamp = 0;
  double value = 0.0;
  std::uint64_t seq = 0;
  SampleMetadata metadata;

  friend bool operator==(const Sample&, const Sample&) = default;
};

/// A detector's verdict for one stream. Carries no raw sample values.
struct DriftDecision {
  std::string stream_id;
  std::string detector_id;
  std::string site;
  TimestampMs decided_at = 0;
  bool drifting = false;
  std::map<EstimatorKind, bool> votes;
  KsResult ks;
  SampleMetadata metadata;
  std::uint64_t seq_at_decision = 0;

  friend bool operator==(const DriftDecision&, const DriftDecision&) = default;
};

}  // namespace le3d

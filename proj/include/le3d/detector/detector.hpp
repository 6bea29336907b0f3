#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "le3d/detector/types.hpp"
#include "le3d/estimators/estimator.hpp"
#include "le3d/estimators/ks.hpp"

namespace le3d {

/// Estimators and voting parameters bound to one stream.
struct StreamBinding {
  std::string stream_id;
  std::vector<EstimatorConfig> estimators;
  int vote_window = 10;
  double quorum_fraction = 0.5;
  std::size_t baseline_capacity = 300;

  void validate() const;
};

/// Minimum number of true votes: ceil(quorum_fraction * n).
std::size_t quorum_count(std::size_t n, double quorum_fraction);

/// True iff at least ceil(quorum_fraction * |votes|) votes are true.
/// Throws InputError on an empty vote map.
bool ensemble_vote(const std::map<EstimatorKind, bool>& votes, double quorum_fraction);

struct DetectorStats {
  std::uint64_t ingested = 0;
  std::uint64_t duplicates = 0;
  std::uint64_t invalid = 0;
  std::uint64_t decisions = 0;
};

/// Per-stream ensemble drift detection.
///
/// Each estimator's vote is "flagged within the last V samples"; the stream
/// is drifting while the votes meet the quorum. Decisions are emitted only
/// on verdict transitions and carry a one-sample K-S test of the last V
/// values against the baseline frozen at drift onset.
class Detector {
 public:
  using EstimatorFactory = std::function<std::unique_ptr<Estimator>(const EstimatorConfig&)>;

  Detector(std::string detector_id, std::string site, EstimatorFactory factory = make_estimator);

  /// Throws ConflictError for a duplicate stream id and ConfigError for a bad binding.
  void register_stream(const StreamBinding& binding);
  bool has_stream(const std::string& stream_id) const;
  std::vector<std::string> streams() const;

  /// Throws RoutingError for unknown streams and InputError for non-finite
  /// values. Stale or duplicate seq numbers are dropped and counted.
  std::optional<DriftDecision> ingest_sample(const Sample& sample);

  /// Current state of a stream as a decision (not a transition). Used to
  /// announce healthy streams. Throws RoutingError.
  DriftDecision status(const std::string& stream_id) const;

  bool drifting(const std::string& stream_id) const;
  std::uint64_t samples_seen(const std::string& stream_id) const;

  /// Values retained per stream (recent window + baseline + frozen copy).
  std::size_t retained_values(const std::string& stream_id) const;

  const DetectorStats& stats() const noexcept { return stats_; }
  const std::string& detector_id() const noexcept { return detector_id_; }
  const std::string& site() const noexcept { return site_; }

 private:
  struct StreamState {
    StreamBinding binding;
    std::vector<std::unique_ptr<Estimator>> estimators;
    std::vector<std::optional<std::uint64_t>> last_flag;
    std::uint64_t count = 0;
    std::optional<std::uint64_t> last_seq;
    bool drifting = false;
    std::deque<double> recent;
    std::deque<double> baseline;
    std::optional<EmpiricalCdf> frozen;
    SampleMetadata metadata;
    TimestampMs last_timestamp = 0;
    std::map<EstimatorKind, bool> votes;
  };

  StreamState& lookup(const std::string& stream_id);
  const StreamState& lookup(const std::string& stream_id) const;
  DriftDecision make_decision(const StreamState& s, const KsResult& ks) const;
  KsResult baseline_test(const StreamState& s) const;

  std::string detector_id_;
  std::string site_;
  EstimatorFactory factory_;
  std::map<std::string, StreamState> streams_;
  DetectorStats stats_;
};

/// Chooses estimator sets by sensor type, falling back to a default set.
class EstimatorPolicy {
 public:
  EstimatorPolicy();

  void set_default(std::vector<EstimatorConfig> set);
  void set_for_type(const std::string& sensor_type, std::vector<EstimatorConfig> set);
  const std::vector<EstimatorConfig>& for_type(const std::string& sensor_type) const;

 private:
  std::vector<EstimatorConfig> default_;
  std::map<std::string, std::vector<EstimatorConfig>> by_type_;
};

}  // namespace le3d

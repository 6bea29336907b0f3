#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "le3d/aggregator/types.hpp"

namespace le3d {

struct AggregatorConfig {
  std::string aggregator_id = "aggregator-1";
  std::string detector_id = "detector-1";
  std::string site = "site-1";
  int natural_quorum = 2;
  std::int64_t concurrency_window_ms = 30'000;
  std::int64_t liveness_timeout_ms = 120'000;
  double tau = 0.3;
  bool gate = false;

  void validate() const;
};

/// |local.D - peer.D| <= tau.
bool ks_similarity_gate(const KsResult& local, const KsResult& peer, double tau);

/// Latest shares per aggregator, keyed by stream.
struct PeerEntry {
  std::map<std::string, AggregateShare> shares;
  TimestampMs last_seen = 0;
};

using PeerTable = std::map<std::string, PeerEntry>;

struct AggregatorStats {
  std::uint64_t shares_built = 0;
  std::uint64_t peer_shares = 0;
  std::uint64_t stale = 0;
  std::uint64_t malformed = 0;
};

/// Natural/abnormal classification from privacy-bounded shares.
///
/// A local drift is natural when at least `natural_quorum` aggregators
/// (self included) report a live, concurrent drift on a stream of the same
/// sensor type; otherwise it is abnormal. Classification is a pure function
/// of the peer table, the config and `now`.
class Aggregator {
 public:
  explicit Aggregator(AggregatorConfig config);

  /// Projects a co-located decision into a share and records it.
  AggregateShare on_local_decision(const DriftDecision& decision, TimestampMs now);

  /// Returns true when the table changed. Stale, self-originated and
  /// malformed shares are dropped and counted.
  bool on_peer_share(const AggregateShare& share, TimestampMs now);

  DriftClass classify_drift(const std::string& stream_id, TimestampMs now) const;

  /// Streams reported by the co-located detector.
  std::vector<std::string> local_streams() const;

  const PeerTable& peers() const noexcept { return table_; }
  const AggregatorConfig& config() const noexcept { return config_; }
  const AggregatorStats& stats() const noexcept { return stats_; }

 private:
  AggregatorConfig config_;
  PeerTable table_;
  std::uint64_t share_seq_ = 0;
  AggregatorStats stats_;
};

}  // namespace le3d

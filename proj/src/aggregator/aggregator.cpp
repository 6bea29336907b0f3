#include "le3d/aggregator/aggregator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "le3d/error.hpp"
#include "le3d/transport/topic.hpp"

namespace le3d {

void AggregatorConfig::validate() const {
  if (!is_valid_segment(aggregator_id)) throw ConfigError("aggregator_id must match [A-Za-z0-9_-]+");
  if (!is_valid_segment(site)) throw ConfigError("site must match [A-Za-z0-9_-]+");
  if (natural_quorum < 2) throw ConfigError("natural_quorum must be at least 2");
  if (concurrency_window_ms < 0) throw ConfigError("concurrency_window_ms must be nonnegative");
  if (liveness_timeout_ms < 1) throw ConfigError("liveness_timeout_ms must be positive");
  if (!(tau >= 0.0 && tau <= 1.0)) throw ConfigError("tau must be in [0,1]");
}

bool ks_similarity_gate(const KsResult& local, const KsResult& peer, double tau) {
  return std::abs(local.statistic_d - peer.statistic_d) <= tau;
}

Aggregator::Aggregator(AggregatorConfig config) : config_(std::move(config)) { config_.validate(); }

AggregateShare Aggregator::on_local_decision(const DriftDecision& decision, TimestampMs now) {
  AggregateShare share;
  share.origin_detector_id = decision.detector_id;
  share.origin_aggregator_id = config_.aggregator_id;
  share.stream_id = decision.stream_id;
  share.sensor_type = decision.metadata.sensor_type;
  share.site = config_.site;
  share.drifting = decision.drifting;
  share.decided_at = decision.decided_at;
  share.ks = decision.ks;
  share.share_seq = ++share_seq_;
  PeerEntry& self = table_[config_.aggregator_id];
  self.shares[share.stream_id] = share;
  self.last_seen = now;
  ++stats_.shares_built;
  return share;
}

bool Aggregator::on_peer_share(const AggregateShare& share, TimestampMs now) {
  const bool well_formed = is_valid_segment(share.origin_aggregator_id) && is_valid_segment(share.stream_id) &&
                           is_valid_segment(share.site) && share.share_seq > 0 &&
                           share.ks.statistic_d >= 0.0 && share.ks.statistic_d <= 1.0 &&
                           share.ks.p_value >= 0.0 && share.ks.p_value <= 1.0;
  if (!well_formed) {
    ++stats_.malformed;
    return false;
  }
  if (share.origin_aggregator_id == config_.aggregator_id) return false;
  PeerEntry& entry = table_[share.origin_aggregator_id];
  auto it = entry.shares.find(share.stream_id);
  if (it != entry.shares.end() && share.share_seq <= it->second.share_seq) {
    ++stats_.stale;
    return false;
  }
  entry.shares[share.stream_id] = share;
  entry.last_seen = std::max(entry.last_seen, now);
  ++stats_.peer_shares;
  return true;
}

DriftClass Aggregator::classify_drift(const std::string& stream_id, TimestampMs now) const {
  DriftClass out;
  out.window_ms = config_.concurrency_window_ms;
  auto self = table_.find(config_.aggregator_id);
  if (self == table_.end()) return out;
  auto local_it = self->second.shares.find(stream_id);
  if (local_it == self->second.shares.end() || !local_it->second.drifting) return out;
  const AggregateShare& local = local_it->second;

  out.concurrent_peers = 1;
  out.contributing_streams.push_back(local.stream_id);
  for (const auto& [id, entry] : table_) {
    if (id == config_.aggregator_id) continue;
    if (now - entry.last_seen > config_.liveness_timeout_ms) continue;
    bool counted = false;
    for (const auto& [sid, share] : entry.shares) {
      if (!share.drifting || share.sensor_type != local.sensor_type) continue;
      if (std::llabs(share.decided_at - local.decided_at) > config_.concurrency_window_ms) continue;
      if (config_.gate && !ks_similarity_gate(local.ks, share.ks, config_.tau)) continue;
      counted = true;
      out.contributing_streams.push_back(sid);
    }
    if (counted) ++out.concurrent_peers;
  }
  std::sort(out.contributing_streams.begin() + 1, out.contributing_streams.end());
  out.kind = out.concurrent_peers >= static_cast<std::uint32_t>(config_.natural_quorum) ? DriftClassKind::Natural
                                                                                        : DriftClassKind::Abnormal;
  return out;
}

std::vector<std::string> Aggregator::local_streams() const {
  std::vector<std::string> out;
  auto self = table_.find(config_.aggregator_id);
  if (self == table_.end()) return out;
  for (const auto& [sid, share] : self->second.shares) out.push_back(sid);
  return out;
}

}  // namespace le3d

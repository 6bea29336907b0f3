#pragma once

#include <deque>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <vector>

#include "le3d/aggregator/aggregator.hpp"
#include "le3d/clock.hpp"
#include "le3d/transport/bus.hpp"
#include "le3d/transport/config.hpp"

namespace le3d {

struct AggregatorServiceOptions {
  AggregatorConfig core;
  std::size_t queue_capacity = 100;

  static AggregatorServiceOptions from_config(const Config& config);
};

struct AggregatorServiceStats {
  std::uint64_t decode_errors = 0;
  std::uint64_t shares_published = 0;
  std::uint64_t shares_queued = 0;
  std::uint64_t shares_dropped = 0;
  std::uint64_t classes_published = 0;
};

/// Aggregator wired to the bus. Listens to the co-located detector's
/// decision topics and to every site's aggregate topics; publishes its own
/// shares and per-stream classifications as retained messages.
class AggregatorService {
 public:
  AggregatorService(Bus& bus, AggregatorServiceOptions options, Clock clock = wall_clock_ms);
  ~AggregatorService();

  void start();
  void stop();

  void handle_decision(const Message& message);
  void handle_share(const Message& message);

  /// Re-evaluates classifications (liveness expiry) and retries queued shares.
  void tick();

  std::optional<ClassReport> latest_class(const std::string& stream_id) const;
  PeerTable peer_table() const;
  AggregatorServiceStats stats() const;
  AggregatorStats core_stats() const;
  std::size_t queued() const;

 private:
  void flush_queue_locked();
  void reclassify_locked();

  Bus& bus_;
  AggregatorServiceOptions options_;
  Clock clock_;
  Aggregator core_;
  mutable std::recursive_mutex mutex_;
  std::deque<AggregateShare> queue_;
  std::map<std::string, ClassReport> published_;
  AggregatorServiceStats stats_;
  std::vector<SubscriptionId> subscriptions_;
};

}  // namespace le3d

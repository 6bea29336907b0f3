#include "le3d/aggregator/service.hpp"

#include "le3d/error.hpp"
#include "le3d/transport/topic.hpp"

namespace le3d {

AggregatorServiceOptions AggregatorServiceOptions::from_config(const Config& c) {
  AggregatorServiceOptions o;
  o.core.aggregator_id = c.get_string("node.aggregator_id");
  o.core.detector_id = c.get_string("node.detector_id");
  o.core.site = c.get_string("node.site");
  o.core.natural_quorum = static_cast<int>(c.get_int("aggregator.natural_quorum"));
  o.core.concurrency_window_ms = c.get_int("aggregator.concurrency_window_ms");
  o.core.liveness_timeout_ms = c.get_int("aggregator.liveness_timeout_ms");
  o.core.tau = c.get_double("aggregator.tau");
  o.core.gate = c.get_bool("aggregator.gate");
  o.queue_capacity = static_cast<std::size_t>(c.get_int("aggregator.queue"));
  o.core.validate();
  return o;
}

AggregatorService::AggregatorService(Bus& bus, AggregatorServiceOptions options, Clock clock)
    : bus_(bus), options_(std::move(options)), clock_(std::move(clock)), core_(options_.core) {}

AggregatorService::~AggregatorService() { stop(); }

void AggregatorService::start() {
  if (!subscriptions_.empty()) return;
  const auto& c = options_.core;
  subscriptions_.push_back(bus_.subscribe("le3d/decision/" + c.site + "/" + c.detector_id + "/+",
                                          [this](const Message& m) { handle_decision(m); }));
  subscriptions_.push_back(bus_.subscribe("le3d/aggregate/+/+", [this](const Message& m) { handle_share(m); }));
}

void AggregatorService::stop() {
  for (auto id : subscriptions_) bus_.unsubscribe(id);
  subscriptions_.clear();
}

void AggregatorService::flush_queue_locked() {
  while (!queue_.empty()) {
    const AggregateShare& share = queue_.front();
    const std::string topic = topic_for(Channel::Aggregate, options_.core.site, {share.stream_id});
    if (!bus_.connected() || !publish_envelope(bus_, topic, make_envelope(share))) return;
    ++stats_.shares_published;
    queue_.pop_front();
  }
}

void AggregatorService::reclassify_locked() {
  const TimestampMs now = clock_();
  for (const auto& stream : core_.local_streams()) {
    ClassReport report;
    report.aggregator_id = options_.core.aggregator_id;
    report.site = options_.core.site;
    report.stream_id = stream;
    report.evaluated_at = now;
    report.drift_class = core_.classify_drift(stream, now);
    auto it = published_.find(stream);
    if (it != published_.end() && it->second.drift_class == report.drift_class) continue;
    const std::string topic = topic_for(Channel::Class, options_.core.site, {stream});
    if (bus_.connected() && publish_envelope(bus_, topic, make_envelope(report))) {
      published_[stream] = report;
      ++stats_.classes_published;
    }
  }
}

void AggregatorService::handle_decision(const Message& message) {
  DriftDecision decision;
  try {
    decision = decode_as<DriftDecision>(message.payload);
  } catch (const DecodeError&) {
    std::lock_guard<std::recursive_mutex> lock(mutex_);
    ++stats_.decode_errors;
    return;
  }
  std::lock_guard<std::recursive_mutex> lock(mutex_);
  // Retained replays after a reconnect repeat the last decision; skip those.
  auto self = core_.peers().find(options_.core.aggregator_id);
  if (self != core_.peers().end()) {
    auto it = self->second.shares.find(decision.stream_id);
    if (it != self->second.shares.end() && it->second.decided_at == decision.decided_at &&
        it->second.drifting == decision.drifting) {
      return;
    }
  }
  AggregateShare share = core_.on_local_decision(decision, clock_());
  queue_.push_back(std::move(share));
  ++stats_.shares_queued;
  if (queue_.size() > options_.queue_capacity) {
    queue_.pop_front();
    ++stats_.shares_dropped;
  }
  flush_queue_locked();
  reclassify_locked();
}

void AggregatorService::handle_share(const Message& message) {
  AggregateShare share;
  try {
    share = decode_as<AggregateShare>(message.payload);
  } catch (const DecodeError&) {
    std::lock_guard<std::recursive_mutex> lock(mutex_);
    ++stats_.decode_errors;
    return;
  }
  std::lock_guard<std::recursive_mutex> lock(mutex_);
  if (core_.on_peer_share(share, clock_())) reclassify_locked();
}

void AggregatorService::tick() {
  std::lock_guard<std::recursive_mutex> lock(mutex_);
  flush_queue_locked();
  reclassify_locked();
}

std::optional<ClassReport> AggregatorService::latest_class(const std::string& stream_id) const {
  std::lock_guard<std::recursive_mutex> lock(mutex_);
  auto it = published_.find(stream_id);
  if (it == published_.end()) return std::nullopt;
  return it->second;
}

PeerTable AggregatorService::peer_table() const {
  std::lock_guard<std::recursive_mutex> lock(mutex_);
  return core_.peers();
}

AggregatorServiceStats AggregatorService::stats() const {
  std::lock_guard<std::recursive_mutex> lock(mutex_);
  return stats_;
}

AggregatorStats AggregatorService::core_stats() const {
  std::lock_guard<std::recursive_mutex> lock(mutex_);
  return core_.stats();
}

std::size_t AggregatorService::queued() const {
  std::lock_guard<std::recursive_mutex> lock(mutex_);
  return queue_.size();
}

}  // namespace le3d

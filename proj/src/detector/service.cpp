#include "le3d/detector/service.hpp"

#include <sstream>

#include "le3d/error.hpp"
#include "le3d/transport/topic.hpp"

namespace le3d {

EstimatorConfig estimator_config_from(const Config& c, EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::Adwin:
      return AdwinConfig{c.get_double("estimators.adwin.delta"),
                         static_cast<int>(c.get_int("estimators.adwin.max_buckets"))};
    case EstimatorKind::PageHinkley:
      return PageHinkleyConfig{static_cast<int>(c.get_int("estimators.pht.min_instances")),
                               c.get_double("estimators.pht.delta"), c.get_double("estimators.pht.lambda"),
                               c.get_double("estimators.pht.alpha")};
    case EstimatorKind::Kswin:
      return KswinConfig{static_cast<int>(c.get_int("estimators.kswin.window_size")),
                         static_cast<int>(c.get_int("estimators.kswin.stat_size")),
                         c.get_double("estimators.kswin.alpha"),
                         static_cast<std::uint64_t>(c.get_int("estimators.kswin.seed"))};
    case EstimatorKind::StaticThreshold:
      return StaticThreshold::Config{c.get_double("estimators.threshold.low"),
                                     c.get_double("estimators.threshold.high")};
  }
  throw ConfigError("unknown estimator kind");
}

std::vector<EstimatorConfig> estimator_set_from(const Config& config, const std::string& list) {
  std::vector<EstimatorConfig> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b == std::string::npos) continue;
    out.push_back(estimator_config_from(config, parse_estimator_kind(item.substr(b, e - b + 1))));
  }
  if (out.empty()) throw ConfigError("estimator list '" + list + "' is empty");
  return out;
}

DetectorServiceOptions DetectorServiceOptions::from_config(const Config& c) {
  DetectorServiceOptions o;
  o.detector_id = c.get_string("node.detector_id");
  o.site = c.get_string("node.site");
  o.subscription = c.get_string("detector.subscription");
  o.relay = c.get_bool("detector.relay");
  o.relay_buffer = static_cast<std::size_t>(c.get_int("detector.relay_buffer"));
  o.announce_after = static_cast<std::uint64_t>(c.get_int("detector.announce_after"));
  o.vote_window = static_cast<int>(c.get_int("detector.vote_window"));
  o.quorum_fraction = c.get_double("detector.quorum_fraction");
  o.baseline_capacity = static_cast<std::size_t>(c.get_int("detector.baseline_capacity"));
  o.policy.set_default(estimator_set_from(c, c.get_string("detector.default_estimators")));
  const std::string prefix = "detector.estimators.";
  for (const auto& key : c.keys_with_prefix(prefix)) {
    o.policy.set_for_type(key.substr(prefix.size()), estimator_set_from(c, c.get_string(key)));
  }
  if (!is_valid_segment(o.detector_id)) throw ConfigError("node.detector_id must match [A-Za-z0-9_-]+");
  if (!is_valid_segment(o.site)) throw ConfigError("node.site must match [A-Za-z0-9_-]+");
  return o;
}

DetectorService::DetectorService(Bus& bus, DetectorServiceOptions options)
    : bus_(bus),
      options_(std::move(options)),
      detector_(options_.detector_id, options_.site),
      relay_(bus, options_.site, options_.relay, options_.relay_buffer) {
  if (options_.subscription.empty()) options_.subscription = "le3d/data/" + options_.site + "/+";
}

DetectorService::~DetectorService() { stop(); }

void DetectorService::start() {
  if (subscription_) return;
  subscription_ = bus_.subscribe(options_.subscription, [this](const Message& m) { handle(m); });
}

void DetectorService::stop() {
  if (!subscription_) return;
  bus_.unsubscribe(*subscription_);
  subscription_.reset();
}

std::string DetectorService::decision_topic(const std::string& stream_id) const {
  return topic_for(Channel::Decision, options_.site, {options_.detector_id, stream_id});
}

void DetectorService::publish_decision(const DriftDecision& decision) {
  if (publish_envelope(bus_, decision_topic(decision.stream_id), make_envelope(decision))) {
    ++stats_.published_decisions;
  } else {
    ++stats_.failed_publishes;
  }
}

void DetectorService::handle(const Message& message) {
  Sample sample;
  try {
    sample = decode_as<Sample>(message.payload);
  } catch (const DecodeError&) {
    std::lock_guard<std::recursive_mutex> lock(mutex_);
    ++stats_.decode_errors;
    return;
  }
  std::optional<DriftDecision> decision;
  std::optional<DriftDecision> announcement;
  {
    std::lock_guard<std::recursive_mutex> lock(mutex_);
    ++stats_.received;
    try {
      if (!detector_.has_stream(sample.stream_id)) {
        StreamBinding b;
        b.stream_id = sample.stream_id;
        b.estimators = options_.policy.for_type(sample.metadata.sensor_type);
        b.vote_window = options_.vote_window;
        b.quorum_fraction = options_.quorum_fraction;
        b.baseline_capacity = options_.baseline_capacity;
        detector_.register_stream(b);
      }
      decision = detector_.ingest_sample(sample);
      if (decision) announced_.insert(sample.stream_id);
      if (!announced_.count(sample.stream_id) &&
          detector_.samples_seen(sample.stream_id) >= options_.announce_after) {
        announcement = detector_.status(sample.stream_id);
        announced_.insert(sample.stream_id);
      }
    } catch (const InputError&) {
      ++stats_.input_errors;
      return;
    }
    // Publishing under the lock keeps per-stream decision order on the bus.
    if (announcement) publish_decision(*announcement);
    if (decision) publish_decision(*decision);
  }
  relay_.relay_sample(sample);
}

DetectorStats DetectorService::detector_stats() const {
  std::lock_guard<std::recursive_mutex> lock(mutex_);
  return detector_.stats();
}

DetectorServiceStats DetectorService::stats() const {
  std::lock_guard<std::recursive_mutex> lock(mutex_);
  return stats_;
}

}  // namespace le3d

#pragma once

#include <cstdint>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "le3d/detector/detector.hpp"
#include "le3d/detector/relay.hpp"
#include "le3d/transport/bus.hpp"
#include "le3d/transport/config.hpp"

namespace le3d {

/// Estimator config for `kind` with values from the `estimators.*` keys.
EstimatorConfig estimator_config_from(const Config& config, EstimatorKind kind);

/// Parses "adwin,pht,kswin" into configs resolved against `config`.
std::vector<EstimatorConfig> estimator_set_from(const Config& config, const std::string& list);

struct DetectorServiceOptions {
  std::string detector_id = "detector-1";
  std::string site = "site-1";
  /// Sample topic filter; empty means this site's data topics.
  std::string subscription;
  bool relay = false;
  std::size_t relay_buffer = 1000;
  /// A healthy stream is announced (drifting=false, retained) after this many samples.
  std::uint64_t announce_after = 30;
  int vote_window = 10;
  double quorum_fraction = 0.5;
  std::size_t baseline_capacity = 300;
  EstimatorPolicy policy;

  static DetectorServiceOptions from_config(const Config& config);
};

struct DetectorServiceStats {
  std::uint64_t received = 0;
  std::uint64_t decode_errors = 0;
  std::uint64_t input_errors = 0;
  std::uint64_t published_decisions = 0;
  std::uint64_t failed_publishes = 0;
};

/// Detector wired to the bus: consumes sample topics, registers streams on
/// first sight using the estimator policy, publishes retained decisions and
/// optionally relays samples.
class DetectorService {
 public:
  DetectorService(Bus& bus, DetectorServiceOptions options);
  ~DetectorService();

  void start();
  void stop();

  /// Processes one raw bus message (exposed for tests and benchmarks).
  void handle(const Message& message);

  std::string decision_topic(const std::string& stream_id) const;

  DetectorStats detector_stats() const;
  DetectorServiceStats stats() const;
  const Relay& relay() const noexcept { return relay_; }
  const DetectorServiceOptions& options() const noexcept { return options_; }

  /// Runs `fn` with the detector under the service lock.
  template <class F>
  auto with_detector(F&& fn) const {
    std::lock_guard<std::recursive_mutex> lock(mutex_);
    return fn(detector_);
  }

 private:
  void publish_decision(const DriftDecision& decision);

  Bus& bus_;
  DetectorServiceOptions options_;
  Detector detector_;
  Relay relay_;
  mutable std::recursive_mutex mutex_;
  std::set<std::string> announced_;
  DetectorServiceStats stats_;
  std::optional<SubscriptionId> subscription_;
};

}  // namespace le3d

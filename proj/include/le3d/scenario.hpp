#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "le3d/aggregator/service.hpp"
#include "le3d/clock.hpp"
#include "le3d/datagen/service.hpp"
#include "le3d/detector/service.hpp"
#include "le3d/transport/loopback.hpp"

namespace le3d {

struct ScenarioOptions {
  std::uint64_t seed = 1;
  int sites = 3;
  std::string sensor_type = "temperature";
  double mean = 20.0;
  double stddev = 0.15;
  std::int64_t period_ms = 100;
  int warmup_samples = 600;
  int post_samples = 400;
  double magnitude = 1.0;
  int vote_window = 100;
  std::int64_t concurrency_window_ms = 30'000;
};

struct PrivacyScan {
  std::uint64_t payloads = 0;
  std::uint64_t violations = 0;
  std::string first_violation;
};

/// Byte-level check of one payload: no `"value"` key and no array whose
/// first element is a number.
bool payload_is_private(std::string_view payload);

/// Scans every decision, aggregate and class message in `messages`.
PrivacyScan scan_privacy(const std::vector<Message>& messages);

/// N sites, each with one emulator, detector and aggregator on a shared
/// loopback bus, driven in virtual time. Everything published is recorded.
class ScenarioStack {
 public:
  explicit ScenarioStack(const ScenarioOptions& options);
  ~ScenarioStack();

  /// Advances virtual time by one period: every emulator emits one sample,
  /// then every aggregator ticks.
  void step();
  void run(int steps);

  /// Publishes a drift command stamped with the current virtual time.
  void inject(const DriftCommand& cmd, int site_index);

  std::string site(int i) const;
  std::string stream(int i) const;

  /// Class reports published by site `i`'s aggregator, in order.
  std::vector<ClassReport> class_history(int i) const;

  LoopbackBus& bus() { return bus_; }
  VirtualClock& clock() { return clock_; }
  const std::vector<Message>& messages() const { return messages_; }
  const ScenarioOptions& options() const { return options_; }
  AggregatorService& aggregator(int i) { return *aggregators_.at(static_cast<std::size_t>(i)); }
  DetectorService& detector(int i) { return *detectors_.at(static_cast<std::size_t>(i)); }
  EmulatorService& emulator(int i) { return *emulators_.at(static_cast<std::size_t>(i)); }

 private:
  ScenarioOptions options_;
  VirtualClock clock_;
  LoopbackBus bus_;
  std::vector<Message> messages_;
  std::vector<std::unique_ptr<EmulatorService>> emulators_;
  std::vector<std::unique_ptr<DetectorService>> detectors_;
  std::vector<std::unique_ptr<AggregatorService>> aggregators_;
};

enum class ScenarioScript { NaturalAllOfType, AbnormalSingle };

std::string_view to_string(ScenarioScript s) noexcept;

struct ScenarioResult {
  ScenarioScript script = ScenarioScript::NaturalAllOfType;
  std::uint64_t seed = 0;
  bool correct = false;
  std::string detail;
  TimestampMs injected_at = 0;
  std::vector<std::vector<ClassReport>> class_history;
  PrivacyScan privacy;
};

/// Warm-up, one Step injection on site 0 (AllOfType or Single), then the
/// post-injection period. The natural script expects every aggregator to
/// publish Natural within the concurrency window; the abnormal script expects
/// site 0 to publish Abnormal and never Natural, and the other sites to
/// publish only None.
ScenarioResult run_scenario(ScenarioScript script, const ScenarioOptions& options);

}  // namespace le3d

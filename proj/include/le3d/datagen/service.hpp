#pragma once

#include <cstdint>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "le3d/datagen/emulator.hpp"
#include "le3d/transport/bus.hpp"

namespace le3d {

/// Topic a drift command is published on: the stream's control topic for
/// Single scope, the broadcast site for AllOfType.
std::string command_topic(const DriftCommand& cmd, const std::string& site);

std::string data_topic(const std::string& site, const std::string& stream_id);

struct EmulatorServiceStats {
  std::uint64_t published = 0;
  std::uint64_t failed_publishes = 0;
  std::uint64_t commands = 0;
  std::uint64_t rejected = 0;
  std::uint64_t decode_errors = 0;
};

/// Emulator on the bus: publishes samples on its data topic, applies drift
/// commands from the control topics and answers with an ack.
class EmulatorService {
 public:
  EmulatorService(Bus& bus, Emulator emulator);
  ~EmulatorService();

  void start();
  void stop();

  /// Generates and publishes one sample stamped `now`.
  Sample tick(TimestampMs now);

  /// Processes one raw control message (exposed for tests).
  void handle(const Message& message);

  std::vector<CommandAck> acks() const;
  EmulatorServiceStats stats() const;

  template <class F>
  auto with_emulator(F&& fn) const {
    std::lock_guard<std::recursive_mutex> lock(mutex_);
    return fn(emulator_);
  }

 private:
  Bus& bus_;
  Emulator emulator_;
  mutable std::recursive_mutex mutex_;
  std::vector<CommandAck> acks_;
  EmulatorServiceStats stats_;
  TimestampMs last_tick_ = 0;
  std::optional<SubscriptionId> subscription_;
};

}  // namespace le3d

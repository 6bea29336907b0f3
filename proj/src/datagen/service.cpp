#include "le3d/datagen/service.hpp"

#include <algorithm>

#include "le3d/error.hpp"
#include "le3d/transport/topic.hpp"

namespace le3d {

std::string command_topic(const DriftCommand& cmd, const std::string& site) {
  if (cmd.scope == DriftScope::AllOfType) return topic_for(Channel::Control, kBroadcastSite, {cmd.target});
  return topic_for(Channel::Control, site, {cmd.target});
}

std::string data_topic(const std::string& site, const std::string& stream_id) {
  return topic_for(Channel::Data, site, {stream_id});
}

EmulatorService::EmulatorService(Bus& bus, Emulator emulator) : bus_(bus), emulator_(std::move(emulator)) {}

EmulatorService::~EmulatorService() { stop(); }

void EmulatorService::start() {
  std::lock_guard<std::recursive_mutex> lock(mutex_);
  if (subscription_) return;
  subscription_ = bus_.subscribe("le3d/control/+/+", [this](const Message& m) { handle(m); });
}

void EmulatorService::stop() {
  std::optional<SubscriptionId> id;
  {
    std::lock_guard<std::recursive_mutex> lock(mutex_);
    id.swap(subscription_);
  }
  if (id) bus_.unsubscribe(*id);
}

Sample EmulatorService::tick(TimestampMs now) {
  std::lock_guard<std::recursive_mutex> lock(mutex_);
  last_tick_ = std::max(last_tick_, now);
  Sample s = emulator_.next_sample(now);
  if (publish_envelope(bus_, data_topic(emulator_.site(), emulator_.stream_id()), make_envelope(s))) {
    ++stats_.published;
  } else {
    ++stats_.failed_publishes;
  }
  return s;
}

void EmulatorService::handle(const Message& message) {
  if (message.retained) return;
  DriftCommand cmd;
  try {
    cmd = decode_as<DriftCommand>(message.payload);
  } catch (const DecodeError&) {
    std::lock_guard<std::recursive_mutex> lock(mutex_);
    ++stats_.decode_errors;
    return;
  }
  std::lock_guard<std::recursive_mutex> lock(mutex_);
  auto ack = emulator_.apply_drift(cmd, std::max(cmd.issued_at, last_tick_));
  if (!ack) return;
  ++stats_.commands;
  if (!ack->accepted) ++stats_.rejected;
  acks_.push_back(*ack);
  publish_envelope(bus_, topic_for(Channel::ControlAck, emulator_.site(), {emulator_.stream_id()}),
                   make_envelope(*ack));
}

std::vector<CommandAck> EmulatorService::acks() const {
  std::lock_guard<std::recursive_mutex> lock(mutex_);
  return acks_;
}

EmulatorServiceStats EmulatorService::stats() const {
  std::lock_guard<std::recursive_mutex> lock(mutex_);
  return stats_;
}

}  // namespace le3d

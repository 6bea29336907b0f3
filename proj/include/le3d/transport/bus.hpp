#pragma once

#include <cstdint>
#include <functional>
#include <string>

#include "le3d/transport/codec.hpp"

namespace le3d {

struct Message {
  std::string topic;
  std::string payload;
  bool retained = false;
};

enum class Qos : std::uint8_t { AtMostOnce = 0, AtLeastOnce = 1 };

using SubscriptionId = std::uint64_t;

/// Publish/subscribe plane shared by the loopback bus and the MQTT client.
///
/// Handlers for one subscription are invoked sequentially, in publish order
/// per topic. A new subscription first receives the retained message of every
/// matching topic (with `retained` set); live deliveries carry retained=false.
class Bus {
 public:
  using Handler = std::function<void(const Message&)>;

  virtual ~Bus() = default;

  /// Returns false when the transport is down and the message was not sent.
  virtual bool publish(const Message& message, Qos qos) = 0;
  virtual SubscriptionId subscribe(const std::string& filter, Handler handler) = 0;
  virtual void unsubscribe(SubscriptionId id) = 0;
  virtual bool connected() const = 0;
};

/// Encodes an envelope and publishes it with the QoS and retained flag its kind requires.
bool publish_envelope(Bus& bus, const std::string& topic, const Envelope& envelope);

}  // namespace le3d

#pragma once

#include <atomic>
#include <deque>
#include <map>
#include <mutex>
#include <optional>
#include <vector>

#include "le3d/transport/bus.hpp"

namespace le3d {

/// In-process bus with MQTT-like retained semantics.
///
/// Publishes are queued and delivered FIFO by whichever thread is draining,
/// so handlers that publish never reorder deliveries. Given a deterministic
/// publish order, delivery order is deterministic.
class LoopbackBus final : public Bus {
 public:
  bool publish(const Message& message, Qos qos) override;
  SubscriptionId subscribe(const std::string& filter, Handler handler) override;
  void unsubscribe(SubscriptionId id) override;
  bool connected() const override;

  /// Simulates a transport outage: publishes fail while disconnected.
  void set_connected(bool up);

  std::optional<std::string> retained_payload(const std::string& topic) const;
  std::size_t retained_count() const;
  /// Exceptions thrown by handlers are swallowed and counted here.
  std::uint64_t handler_errors() const noexcept { return handler_errors_.load(); }

 private:
  struct Delivery {
    Message message;
    std::optional<SubscriptionId> only;  // targeted retained replay
  };
  struct Subscription {
    std::string filter;
    std::shared_ptr<Handler> handler;
  };

  void drain(std::unique_lock<std::mutex>& lock);

  mutable std::mutex mutex_;
  std::map<SubscriptionId, Subscription> subscriptions_;
  std::map<std::string, std::string> retained_;
  std::deque<Delivery> queue_;
  SubscriptionId next_id_ = 1;
  bool draining_ = false;
  bool connected_ = true;
  std::atomic<std::uint64_t> handler_errors_{0};
};

}  // namespace le3d

#include "le3d/transport/loopback.hpp"

#include "le3d/transport/topic.hpp"

namespace le3d {

bool publish_envelope(Bus& bus, const std::string& topic, const Envelope& envelope) {
  Message m{topic, encode(envelope), envelope.retained};
  return bus.publish(m, envelope.retained ? Qos::AtLeastOnce : Qos::AtMostOnce);
}

bool LoopbackBus::publish(const Message& message, Qos) {
  std::unique_lock lock(mutex_);
  if (!connected_) return false;
  if (message.retained) {
    if (message.payload.empty()) {
      retained_.erase(message.topic);
    } else {
      retained_[message.topic] = message.payload;
    }
  }
  Delivery d{message, std::nullopt};
  d.message.retained = false;
  queue_.push_back(std::move(d));
  drain(lock);
  return true;
}

SubscriptionId LoopbackBus::subscribe(const std::string& filter, Handler handler) {
  std::unique_lock lock(mutex_);
  const SubscriptionId id = next_id_++;
  subscriptions_[id] = {filter, std::make_shared<Handler>(std::move(handler))};
  for (const auto& [topic, payload] : retained_) {
    if (topic_matches(filter, topic)) queue_.push_back({{topic, payload, true}, id});
  }
  drain(lock);
  return id;
}

void LoopbackBus::unsubscribe(SubscriptionId id) {
  std::lock_guard lock(mutex_);
  subscriptions_.erase(id);
}

bool LoopbackBus::connected() const {
  std::lock_guard lock(mutex_);
  return connected_;
}

void LoopbackBus::set_connected(bool up) {
  std::lock_guard lock(mutex_);
  connected_ = up;
}

std::optional<std::string> LoopbackBus::retained_payload(const std::string& topic) const {
  std::lock_guard lock(mutex_);
  auto it = retained_.find(topic);
  if (it == retained_.end()) return std::nullopt;
  return it->second;
}

std::size_t LoopbackBus::retained_count() const {
  std::lock_guard lock(mutex_);
  return retained_.size();
}

void LoopbackBus::drain(std::unique_lock<std::mutex>& lock) {
  if (draining_) return;
  draining_ = true;
  while (!queue_.empty()) {
    Delivery d = std::move(queue_.front());
    queue_.pop_front();
    std::vector<std::shared_ptr<Handler>> targets;
    for (const auto& [id, sub] : subscriptions_) {
      if (d.only && *d.only != id) continue;
      if (topic_matches(sub.filter, d.message.topic)) targets.push_back(sub.handler);
    }
    lock.unlock();
    for (const auto& h : targets) {
      try {
        (*h)(d.message);
      } catch (const std::exception&) {
        ++handler_errors_;
      }
    }
    lock.lock();
  }
  draining_ = false;
}

}  // namespace le3d

#include "le3d/detector/relay.hpp"

#include "le3d/transport/topic.hpp"

namespace le3d {

Relay::Relay(Bus& bus, std::string site, bool enabled, std::size_t capacity)
    : bus_(bus), site_(std::move(site)), enabled_(enabled), capacity_(capacity) {}

bool Relay::send(const Sample& sample) {
  if (!bus_.connected()) return false;
  const std::string topic = topic_for(Channel::Relay, site_, {sample.stream_id});
  if (!publish_envelope(bus_, topic, make_envelope(sample))) return false;
  ++published_;
  return true;
}

std::size_t Relay::flush_locked() {
  std::size_t sent = 0;
  while (!buffer_.empty() && send(buffer_.front())) {
    buffer_.pop_front();
    ++sent;
  }
  return sent;
}

std::size_t Relay::flush() {
  std::lock_guard lock(mutex_);
  return flush_locked();
}

std::size_t Relay::relay_sample(const Sample& sample) {
  if (!enabled_) return 0;
  std::lock_guard lock(mutex_);
  std::size_t sent = flush_locked();
  if (buffer_.empty() && send(sample)) return sent + 1;
  buffer_.push_back(sample);
  if (buffer_.size() > capacity_) {
    buffer_.pop_front();
    ++dropped_;
  }
  return sent;
}

std::size_t Relay::buffered() const {
  std::lock_guard lock(mutex_);
  return buffer_.size();
}

std::uint64_t Relay::dropped() const {
  std::lock_guard lock(mutex_);
  return dropped_;
}

std::uint64_t Relay::published() const {
  std::lock_guard lock(mutex_);
  return published_;
}

}  // namespace le3d

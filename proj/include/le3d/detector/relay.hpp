#pragma once

#include <cstdint>
#include <deque>
#include <mutex>
#include <string>

#include "le3d/detector/types.hpp"
#include "le3d/transport/bus.hpp"

namespace le3d {

/// Forwards raw samples to the cloud-facing relay topic when enabled.
///
/// While the transport is down, samples are buffered up to `capacity`; the
/// oldest are dropped beyond that. The buffer is flushed in arrival order
/// before the next live sample once the transport is back.
class Relay {
 public:
  Relay(Bus& bus, std::string site, bool enabled, std::size_t capacity = 1000);

  /// Returns the number of publications made by this call.
  std::size_t relay_sample(const Sample& sample);
  std::size_t flush();

  bool enabled() const noexcept { return enabled_; }
  std::size_t buffered() const;
  std::uint64_t dropped() const;
  std::uint64_t published() const;

 private:
  bool send(const Sample& sample);
  std::size_t flush_locked();

  Bus& bus_;
  std::string site_;
  bool enabled_;
  std::size_t capacity_;
  mutable std::mutex mutex_;
  std::deque<Sample> buffer_;
  std::uint64_t dropped_ = 0;
  std::uint64_t published_ = 0;
};

}  // namespace le3d

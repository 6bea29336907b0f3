#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <functional>

namespace le3d {

using Clock = std::function<std::int64_t()>;

/// Milliseconds since the Unix epoch.
inline std::int64_t wall_clock_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

/// Manually advanced clock for simulations.
class VirtualClock {
 public:
  explicit VirtualClock(std::int64_t start_ms = 0) : now_(start_ms) {}
  std::int64_t now() const noexcept { return now_.load(); }
  void set(std::int64_t t) noexcept { now_.store(t); }
  void advance(std::int64_t dt) noexcept { now_.fetch_add(dt); }
  Clock as_clock() const {
    return [this] { return now(); };
  }

 private:
  std::atomic<std::int64_t> now_;
};

}  // namespace le3d

#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "le3d/coordination/registry.hpp"

namespace httplib {
class Client;
}

namespace le3d {

/// REST client for the coordinator, used by services to announce themselves,
/// request stream assignments and keep their registrations live.
class CoordinatorClient {
 public:
  /// `url` is `http://host:port`. Throws ConfigError for an unusable url.
  CoordinatorClient(const std::string& url, std::int64_t heartbeat_interval_ms);
  ~CoordinatorClient();

  /// Returns the server-assigned entity id. Errors map back from the HTTP
  /// status: 400 InputError, 404 NotFoundError, 409 ConflictError, anything
  /// else (including an unreachable server) Error.
  std::string register_entity(EntityKind kind, const std::string& site,
                              const std::optional<std::string>& sensor_type = std::nullopt);
  Assignment assign(const std::string& source_entity_id, const std::string& stream_id);
  void heartbeat(const std::string& entity_id);

  /// Sends a heartbeat for every entity registered through this client once
  /// per interval on a background thread. Failures are counted, not thrown.
  void start_heartbeats();
  void stop();

  std::vector<std::string> registered() const;
  std::uint64_t heartbeat_failures() const noexcept { return failures_; }

 private:
  std::unique_ptr<httplib::Client> http_;
  std::int64_t interval_ms_;
  mutable std::mutex mutex_;
  std::condition_variable cv_;
  std::vector<std::string> entities_;
  std::thread thread_;
  bool stopping_ = false;
  std::atomic<std::uint64_t> failures_{0};
};

}  // namespace le3d

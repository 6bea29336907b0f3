#pragma once

#include <condition_variable>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "le3d/coordination/registry.hpp"
#include "le3d/transport/bus.hpp"
#include "le3d/transport/config.hpp"

namespace httplib {
class Server;
}

namespace le3d {

/// Feeds decisions, classifications, relayed samples and command acks from
/// the bus into the registry, and publishes drift commands for the control
/// proxy.
class CoordinatorBridge {
 public:
  CoordinatorBridge(Bus& bus, Registry& registry);
  ~CoordinatorBridge();

  void start();
  void stop();
  void handle(const Message& message);

  /// Publishes `cmd` and collects acks received within `wait_ms`. Single
  /// scope returns on the first ack; AllOfType keeps collecting until the
  /// wait elapses or acks stop arriving for a short quiet period.
  std::vector<CommandAck> send_command(const DriftCommand& cmd, std::int64_t wait_ms);

  std::uint64_t decode_errors() const;

 private:
  Bus& bus_;
  Registry& registry_;
  mutable std::mutex mutex_;
  std::condition_variable cv_;
  std::vector<CommandAck> acks_;
  std::uint64_t decode_errors_ = 0;
  std::vector<SubscriptionId> subscriptions_;
};

struct CoordinatorOptions {
  std::string host = "0.0.0.0";
  int port = 8080;
  std::int64_t control_wait_ms = 2000;
  std::string static_dir;
  RegistryConfig registry;

  static CoordinatorOptions from_config(const Config& config);
};

/// REST and server-push front end of the registry.
class CoordinatorServer {
 public:
  CoordinatorServer(Registry& registry, EventHub& events, CoordinatorOptions options,
                    CoordinatorBridge* bridge = nullptr);
  ~CoordinatorServer();

  /// Binds (port 0 picks a free port) and serves on a background thread.
  /// Returns the bound port. Throws Error if binding fails.
  int start();
  /// Serves on the calling thread until stop().
  void run();
  void stop();
  int port() const noexcept { return port_; }

 private:
  void routes();

  Registry& registry_;
  EventHub& events_;
  CoordinatorOptions options_;
  CoordinatorBridge* bridge_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  int port_ = 0;
};

}  // namespace le3d

#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <string>
#include <thread>

#include "le3d/transport/bus.hpp"

namespace le3d {

struct MqttOptions {
  std::string host = "127.0.0.1";
  int port = 1883;
  std::string client_id;
  std::string username;
  std::string password;
  int keepalive_s = 30;
  std::chrono::milliseconds ack_timeout{3000};
};

/// Minimal MQTT 3.1.1 client (clean session, QoS 0/1) implementing Bus.
///
/// Messages are dispatched on an internal reader thread. Calling subscribe()
/// from inside a handler does not wait for the broker's SUBACK. A retained
/// replay reaches only subscriptions that have not yet seen its topic, which
/// matches the loopback bus.
class MqttClient final : public Bus {
 public:
  explicit MqttClient(MqttOptions options);
  ~MqttClient() override;

  MqttClient(const MqttClient&) = delete;
  MqttClient& operator=(const MqttClient&) = delete;

  /// Opens the TCP session and restores subscriptions. Throws Error.
  void connect();
  void disconnect();

  bool publish(const Message& message, Qos qos) override;
  SubscriptionId subscribe(const std::string& filter, Handler handler) override;
  void unsubscribe(SubscriptionId id) override;
  bool connected() const override { return connected_.load(); }

  /// QoS 1 publishes not yet acknowledged by the broker.
  std::size_t inflight() const;

 private:
  void reader_loop(int fd);
  void ping_loop();
  bool send(const std::string& bytes);
  std::uint16_t next_packet_id();
  bool send_subscribe(const std::string& filter, bool wait);
  void close_socket();

  MqttOptions options_;
  std::atomic<bool> connected_{false};
  std::atomic<bool> stopping_{false};
  int fd_ = -1;

  mutable std::mutex write_mutex_;
  mutable std::mutex state_mutex_;
  std::condition_variable ack_cv_;
  std::set<std::uint16_t> pending_acks_;
  std::map<std::uint16_t, std::string> inflight_;  // packet id -> framed PUBLISH
  struct Subscription {
    std::string filter;
    std::shared_ptr<Handler> handler;
    std::set<std::string> replayed;  // topics already delivered since the last connect
  };
  std::map<SubscriptionId, Subscription> subscriptions_;
  SubscriptionId next_sub_id_ = 1;
  std::uint16_t packet_id_ = 0;

  std::thread reader_;
  std::thread pinger_;
  std::thread::id reader_id_;
  std::mutex ping_mutex_;
  std::condition_variable ping_cv_;
};

/// Small in-process MQTT 3.1.1 broker: clean sessions, QoS 0/1, retained
/// messages, '+'/'#' wildcards. Intended for local deployments and tests.
class MqttBroker {
 public:
  /// Port 0 picks an ephemeral port.
  explicit MqttBroker(int port = 0, std::string bind_address = "127.0.0.1");
  ~MqttBroker();

  MqttBroker(const MqttBroker&) = delete;
  MqttBroker& operator=(const MqttBroker&) = delete;

  void start();
  void stop();
  int port() const noexcept { return port_; }
  std::size_t client_count() const;

 private:
  struct Session;
  void accept_loop();
  void serve(std::shared_ptr<Session> session);
  void route(const std::string& topic, const std::string& payload, std::uint8_t qos);

  int port_;
  std::string bind_address_;
  int listen_fd_ = -1;
  std::atomic<bool> running_{false};
  std::thread acceptor_;
  mutable std::mutex mutex_;
  std::map<int, std::shared_ptr<Session>> sessions_;
  std::map<std::string, std::string> retained_;
  std::vector<std::thread> workers_;
};

}  // namespace le3d

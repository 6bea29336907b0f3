#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cstring>
#include <vector>

#include "le3d/error.hpp"
#include "le3d/transport/mqtt.hpp"
#include "le3d/transport/topic.hpp"
#include "mqtt_wire.hpp"

namespace le3d {

MqttClient::MqttClient(MqttOptions options) : options_(std::move(options)) {
  if (options_.client_id.empty()) {
    options_.client_id = "le3d-" + std::to_string(::getpid()) + "-" +
                         std::to_string(reinterpret_cast<std::uintptr_t>(this) & 0xFFFFFF);
  }
}

MqttClient::~MqttClient() { disconnect(); }

void MqttClient::connect() {
  if (connected_) return;
  disconnect();  // join leftovers from a dropped session
  stopping_ = false;

  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  const std::string port = std::to_string(options_.port);
  if (::getaddrinfo(options_.host.c_str(), port.c_str(), &hints, &res) != 0 || res == nullptr) {
    throw Error("mqtt: cannot resolve " + options_.host);
  }
  int fd = -1;
  for (addrinfo* ai = res; ai != nullptr; ai = ai->ai_next) {
    fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
    if (fd < 0) continue;
    if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) break;
    ::close(fd);
    fd = -1;
  }
  ::freeaddrinfo(res);
  if (fd < 0) throw Error("mqtt: cannot connect to " + options_.host + ":" + port);
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));

  std::string body;
  mqtt::put_string(body, "MQTT");
  body.push_back(4);  // protocol level 3.1.1
  std::uint8_t flags = 0x02;  // clean session
  if (!options_.username.empty()) flags |= 0x80;
  if (!options_.password.empty()) flags |= 0x40;
  body.push_back(static_cast<char>(flags));
  mqtt::put_u16(body, static_cast<std::uint16_t>(options_.keepalive_s));
  mqtt::put_string(body, options_.client_id);
  if (!options_.username.empty()) mqtt::put_string(body, options_.username);
  if (!options_.password.empty()) mqtt::put_string(body, options_.password);
  if (!mqtt::write_all(fd, mqtt::frame(mqtt::kConnect << 4, body))) {
    ::close(fd);
    throw Error("mqtt: failed to send CONNECT");
  }
  auto ack = mqtt::read_packet(fd);
  if (!ack || ack->type() != mqtt::kConnack || ack->body.size() < 2) {
    ::close(fd);
    throw Error("mqtt: no CONNACK from broker");
  }
  if (ack->body[1] != 0) {
    ::close(fd);
    throw Error("mqtt: connection refused, code " + std::to_string(static_cast<int>(ack->body[1])));
  }

  fd_ = fd;
  connected_ = true;
  reader_ = std::thread([this, fd] { reader_loop(fd); });
  reader_id_ = reader_.get_id();
  pinger_ = std::thread([this] { ping_loop(); });

  std::vector<std::string> filters;
  std::vector<std::string> resend;
  {
    std::lock_guard lock(state_mutex_);
    std::set<std::string> unique;
    for (auto& [id, sub] : subscriptions_) {
      unique.insert(sub.filter);
      sub.replayed.clear();
    }
    filters.assign(unique.begin(), unique.end());
    for (auto& [id, bytes] : inflight_) {
      bytes[0] = static_cast<char>(bytes[0] | 0x08);  // DUP
      resend.push_back(bytes);
    }
  }
  for (const auto& f : filters) send_subscribe(f, true);
  for (const auto& bytes : resend) send(bytes);
}

void MqttClient::close_socket() {
  std::lock_guard lock(write_mutex_);
  if (fd_ >= 0) {
    ::shutdown(fd_, SHUT_RDWR);
    ::close(fd_);
    fd_ = -1;
  }
}

void MqttClient::disconnect() {
  stopping_ = true;
  if (connected_) {
    send(mqtt::frame(mqtt::kDisconnect << 4, {}));
    connected_ = false;
  }
  {
    std::lock_guard lock(write_mutex_);
    if (fd_ >= 0) ::shutdown(fd_, SHUT_RDWR);
  }
  ping_cv_.notify_all();
  if (reader_.joinable() && reader_.get_id() != std::this_thread::get_id()) reader_.join();
  if (pinger_.joinable()) pinger_.join();
  close_socket();
  ack_cv_.notify_all();
}

bool MqttClient::send(const std::string& bytes) {
  std::lock_guard lock(write_mutex_);
  if (fd_ < 0) return false;
  if (!mqtt::write_all(fd_, bytes)) {
    connected_ = false;
    return false;
  }
  return true;
}

std::uint16_t MqttClient::next_packet_id() {
  std::lock_guard lock(state_mutex_);
  if (++packet_id_ == 0) packet_id_ = 1;
  return packet_id_;
}

bool MqttClient::publish(const Message& message, Qos qos) {
  if (!connected_) return false;
  mqtt::PublishPacket p;
  p.topic = message.topic;
  p.payload = message.payload;
  p.retain = message.retained;
  p.qos = static_cast<std::uint8_t>(qos);
  if (p.qos > 0) p.packet_id = next_packet_id();
  const std::string bytes = mqtt::encode_publish(p);
  if (p.qos > 0) {
    std::lock_guard lock(state_mutex_);
    inflight_[p.packet_id] = bytes;
  }
  return send(bytes);
}

bool MqttClient::send_subscribe(const std::string& filter, bool wait) {
  const std::uint16_t id = next_packet_id();
  std::string body;
  mqtt::put_u16(body, id);
  mqtt::put_string(body, filter);
  body.push_back(1);  // requested QoS
  {
    std::lock_guard lock(state_mutex_);
    pending_acks_.insert(id);
  }
  if (!send(mqtt::frame(mqtt::kSubscribe << 4 | 0x02, body))) return false;
  if (!wait) return true;
  std::unique_lock lock(state_mutex_);
  return ack_cv_.wait_for(lock, options_.ack_timeout,
                          [&] { return !pending_acks_.count(id) || !connected_; }) &&
         connected_;
}

SubscriptionId MqttClient::subscribe(const std::string& filter, Handler handler) {
  SubscriptionId id;
  {
    std::lock_guard lock(state_mutex_);
    id = next_sub_id_++;
    subscriptions_[id] = {filter, std::make_shared<Handler>(std::move(handler)), {}};
  }
  if (connected_) {
    const bool wait = std::this_thread::get_id() != reader_id_;
    if (!send_subscribe(filter, wait) && wait) throw Error("mqtt: SUBSCRIBE to '" + filter + "' not acknowledged");
  }
  return id;
}

void MqttClient::unsubscribe(SubscriptionId id) {
  std::string filter;
  bool last = true;
  {
    std::lock_guard lock(state_mutex_);
    auto it = subscriptions_.find(id);
    if (it == subscriptions_.end()) return;
    filter = it->second.filter;
    subscriptions_.erase(it);
    for (const auto& [other, sub] : subscriptions_) {
      if (sub.filter == filter) last = false;
    }
  }
  if (last && connected_) {
    std::string body;
    mqtt::put_u16(body, next_packet_id());
    mqtt::put_string(body, filter);
    send(mqtt::frame(mqtt::kUnsubscribe << 4 | 0x02, body));
  }
}

std::size_t MqttClient::inflight() const {
  std::lock_guard lock(state_mutex_);
  return inflight_.size();
}

void MqttClient::reader_loop(int fd) {
  while (true) {
    auto pkt = mqtt::read_packet(fd);
    if (!pkt) break;
    try {
      switch (pkt->type()) {
        case mqtt::kPublish: {
          const auto p = mqtt::decode_publish(*pkt);
          if (p.qos == 1) {
            std::string body;
            mqtt::put_u16(body, p.packet_id);
            send(mqtt::frame(mqtt::kPuback << 4, body));
          }
          std::vector<std::shared_ptr<Handler>> targets;
          {
            std::lock_guard lock(state_mutex_);
            for (auto& [id, sub] : subscriptions_) {
              if (!topic_matches(sub.filter, p.topic)) continue;
              if (!sub.replayed.insert(p.topic).second && p.retain) continue;
              targets.push_back(sub.handler);
            }
          }
          const Message m{p.topic, p.payload, p.retain};
          for (const auto& h : targets) (*h)(m);
          break;
        }
        case mqtt::kPuback: {
          mqtt::Reader r(pkt->body);
          const auto id = r.u16();
          std::lock_guard lock(state_mutex_);
          inflight_.erase(id);
          break;
        }
        case mqtt::kSuback: {
          mqtt::Reader r(pkt->body);
          const auto id = r.u16();
          {
            std::lock_guard lock(state_mutex_);
            pending_acks_.erase(id);
          }
          ack_cv_.notify_all();
          break;
        }
        default:
          break;  // UNSUBACK, PINGRESP
      }
    } catch (const std::exception&) {
      // A malformed packet or a throwing handler must not kill the session.
    }
  }
  connected_ = false;
  ack_cv_.notify_all();
  ping_cv_.notify_all();
}

void MqttClient::ping_loop() {
  const auto period = std::chrono::milliseconds(std::max(500, options_.keepalive_s * 500));
  std::unique_lock lock(ping_mutex_);
  while (!stopping_ && connected_) {
    if (ping_cv_.wait_for(lock, period, [&] { return stopping_.load() || !connected_.load(); })) break;
    send(mqtt::frame(mqtt::kPingreq << 4, {}));
  }
}

}  // namespace le3d

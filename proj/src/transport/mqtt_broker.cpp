#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <vector>

#include "le3d/error.hpp"
#include "le3d/transport/mqtt.hpp"
#include "le3d/transport/topic.hpp"
#include "mqtt_wire.hpp"

namespace le3d {

struct MqttBroker::Session {
  int fd = -1;
  std::mutex write_mutex;
  std::map<std::string, std::uint8_t> filters;  // filter -> granted QoS
  std::uint16_t packet_id = 0;

  bool write(const std::string& bytes) {
    std::lock_guard lock(write_mutex);
    return mqtt::write_all(fd, bytes);
  }
  std::uint16_t next_id() {
    if (++packet_id == 0) packet_id = 1;
    return packet_id;
  }
};

MqttBroker::MqttBroker(int port, std::string bind_address)
    : port_(port), bind_address_(std::move(bind_address)) {}

MqttBroker::~MqttBroker() { stop(); }

void MqttBroker::start() {
  if (running_) return;
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) throw Error("broker: socket() failed");
  int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(static_cast<std::uint16_t>(port_));
  if (::inet_pton(AF_INET, bind_address_.c_str(), &addr.sin_addr) != 1) {
    throw Error("broker: invalid bind address " + bind_address_);
  }
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0 ||
      ::listen(listen_fd_, 64) != 0) {
    ::close(listen_fd_);
    listen_fd_ = -1;
    throw Error("broker: cannot listen on port " + std::to_string(port_));
  }
  socklen_t len = sizeof(addr);
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
  running_ = true;
  acceptor_ = std::thread([this] { accept_loop(); });
}

void MqttBroker::stop() {
  if (!running_.exchange(false)) return;
  if (acceptor_.joinable()) acceptor_.join();
  ::close(listen_fd_);
  listen_fd_ = -1;
  {
    std::lock_guard lock(mutex_);
    for (auto& [fd, s] : sessions_) ::shutdown(fd, SHUT_RDWR);
  }
  for (auto& t : workers_) {
    if (t.joinable()) t.join();
  }
  workers_.clear();
}

std::size_t MqttBroker::client_count() const {
  std::lock_guard lock(mutex_);
  return sessions_.size();
}

void MqttBroker::accept_loop() {
  while (running_) {
    pollfd pfd{listen_fd_, POLLIN, 0};
    if (::poll(&pfd, 1, 100) <= 0) continue;
    const int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) continue;
    int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
    auto session = std::make_shared<Session>();
    session->fd = fd;
    std::lock_guard lock(mutex_);
    if (!running_) {
      ::close(fd);
      break;
    }
    sessions_[fd] = session;
    workers_.emplace_back([this, session] { serve(session); });
  }
}

void MqttBroker::route(const std::string& topic, const std::string& payload, std::uint8_t qos) {
  std::lock_guard lock(mutex_);
  for (auto& [fd, s] : sessions_) {
    int granted = -1;
    for (const auto& [filter, q] : s->filters) {
      if (topic_matches(filter, topic)) granted = std::max<int>(granted, q);
    }
    if (granted < 0) continue;
    mqtt::PublishPacket out;
    out.topic = topic;
    out.payload = payload;
    out.qos = static_cast<std::uint8_t>(std::min<int>(granted, qos));
    if (out.qos > 0) out.packet_id = s->next_id();
    s->write(mqtt::encode_publish(out));
  }
}

void MqttBroker::serve(std::shared_ptr<Session> session) {
  const int fd = session->fd;
  auto first = mqtt::read_packet(fd);
  bool ok = first && first->type() == mqtt::kConnect;
  if (ok) {
    std::string ack;
    ack.push_back(0);  // no session present
    ack.push_back(0);  // accepted
    ok = session->write(mqtt::frame(mqtt::kConnack << 4, ack));
  }
  while (ok && running_) {
    auto pkt = mqtt::read_packet(fd);
    if (!pkt) break;
    try {
      switch (pkt->type()) {
        case mqtt::kPublish: {
          auto p = mqtt::decode_publish(*pkt);
          if (p.qos == 1) {
            std::string body;
            mqtt::put_u16(body, p.packet_id);
            session->write(mqtt::frame(mqtt::kPuback << 4, body));
          }
          if (p.retain) {
            std::lock_guard lock(mutex_);
            if (p.payload.empty()) {
              retained_.erase(p.topic);
            } else {
              retained_[p.topic] = p.payload;
            }
          }
          route(p.topic, p.payload, std::min<std::uint8_t>(p.qos, 1));
          break;
        }
        case mqtt::kSubscribe: {
          mqtt::Reader r(pkt->body);
          const auto id = r.u16();
          std::vector<std::pair<std::string, std::uint8_t>> requested;
          while (!r.done()) {
            std::string filter = r.str();
            const std::uint8_t q = std::min<std::uint8_t>(r.u8(), 1);
            requested.emplace_back(std::move(filter), q);
          }
          std::string body;
          mqtt::put_u16(body, id);
          std::vector<mqtt::PublishPacket> replay;
          {
            std::lock_guard lock(mutex_);
            for (const auto& [filter, q] : requested) {
              session->filters[filter] = q;
              body.push_back(static_cast<char>(q));
              for (const auto& [topic, payload] : retained_) {
                if (!topic_matches(filter, topic)) continue;
                mqtt::PublishPacket out;
                out.topic = topic;
                out.payload = payload;
                out.retain = true;
                out.qos = q;
                replay.push_back(std::move(out));
              }
            }
            // Hold the routing lock so live traffic cannot overtake the replay.
            session->write(mqtt::frame(mqtt::kSuback << 4, body));
            for (auto& out : replay) {
              if (out.qos > 0) out.packet_id = session->next_id();
              session->write(mqtt::encode_publish(out));
            }
          }
          break;
        }
        case mqtt::kUnsubscribe: {
          mqtt::Reader r(pkt->body);
          const auto id = r.u16();
          {
            std::lock_guard lock(mutex_);
            while (!r.done()) session->filters.erase(r.str());
          }
          std::string body;
          mqtt::put_u16(body, id);
          session->write(mqtt::frame(mqtt::kUnsuback << 4, body));
          break;
        }
        case mqtt::kPingreq:
          session->write(mqtt::frame(mqtt::kPingresp << 4, {}));
          break;
        case mqtt::kDisconnect:
          ok = false;
          break;
        default:
          break;
      }
    } catch (const std::exception&) {
      ok = false;  // protocol violation closes the connection
    }
  }
  std::lock_guard lock(mutex_);
  sessions_.erase(fd);
  ::shutdown(fd, SHUT_RDWR);
  ::close(fd);
}

}  // namespace le3d

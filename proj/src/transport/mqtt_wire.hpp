#pragma once

// MQTT 3.1.1 framing shared by the client and the embedded broker.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace le3d::mqtt {

enum PacketType : std::uint8_t {
  kConnect = 1,
  kConnack = 2,
  kPublish = 3,
  kPuback = 4,
  kSubscribe = 8,
  kSuback = 9,
  kUnsubscribe = 10,
  kUnsuback = 11,
  kPingreq = 12,
  kPingresp = 13,
  kDisconnect = 14,
};

struct Packet {
  std::uint8_t header = 0;  // type << 4 | flags
  std::string body;

  std::uint8_t type() const noexcept { return header >> 4; }
  std::uint8_t flags() const noexcept { return header & 0x0F; }
};

/// Frames a packet (fixed header + remaining length + body).
std::string frame(std::uint8_t header, std::string_view body);

void put_u16(std::string& out, std::uint16_t v);
void put_string(std::string& out, std::string_view s);

/// Cursor over a packet body; throws le3d::Error on truncation.
class Reader {
 public:
  explicit Reader(std::string_view data) : data_(data) {}
  std::uint8_t u8();
  std::uint16_t u16();
  std::string str();
  std::string rest();
  bool done() const noexcept { return pos_ >= data_.size(); }

 private:
  std::string_view data_;
  std::size_t pos_ = 0;
};

/// Blocking read of one packet. Returns nullopt on EOF or socket error.
std::optional<Packet> read_packet(int fd);

/// Blocking write of all bytes. Returns false on socket error.
bool write_all(int fd, std::string_view data);

struct PublishPacket {
  std::string topic;
  std::string payload;
  std::uint8_t qos = 0;
  bool retain = false;
  bool dup = false;
  std::uint16_t packet_id = 0;
};

std::string encode_publish(const PublishPacket& p);
PublishPacket decode_publish(const Packet& p);

}  // namespace le3d::mqtt

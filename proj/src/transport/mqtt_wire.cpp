#include "mqtt_wire.hpp"

#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>

#include "le3d/error.hpp"

namespace le3d::mqtt {

std::string frame(std::uint8_t header, std::string_view body) {
  std::string out;
  out.push_back(static_cast<char>(header));
  std::size_t len = body.size();
  do {
    std::uint8_t byte = len % 128;
    len /= 128;
    if (len > 0) byte |= 0x80;
    out.push_back(static_cast<char>(byte));
  } while (len > 0);
  out.append(body);
  return out;
}

void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v >> 8));
  out.push_back(static_cast<char>(v & 0xFF));
}

void put_string(std::string& out, std::string_view s) {
  put_u16(out, static_cast<std::uint16_t>(s.size()));
  out.append(s);
}

std::uint8_t Reader::u8() {
  if (pos_ + 1 > data_.size()) throw Error("mqtt: truncated packet");
  return static_cast<std::uint8_t>(data_[pos_++]);
}

std::uint16_t Reader::u16() {
  const std::uint16_t hi = u8();
  const std::uint16_t lo = u8();
  return static_cast<std::uint16_t>(hi << 8 | lo);
}

std::string Reader::str() {
  const std::size_t len = u16();
  if (pos_ + len > data_.size()) throw Error("mqtt: truncated string");
  std::string s(data_.substr(pos_, len));
  pos_ += len;
  return s;
}

std::string Reader::rest() {
  std::string s(data_.substr(pos_));
  pos_ = data_.size();
  return s;
}

namespace {

bool read_exact(int fd, char* buf, std::size_t n) {
  std::size_t got = 0;
  while (got < n) {
    const ssize_t r = ::recv(fd, buf + got, n - got, 0);
    if (r == 0) return false;
    if (r < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    got += static_cast<std::size_t>(r);
  }
  return true;
}

}  // namespace

std::optional<Packet> read_packet(int fd) {
  Packet p;
  char c;
  if (!read_exact(fd, &c, 1)) return std::nullopt;
  p.header = static_cast<std::uint8_t>(c);
  std::size_t len = 0;
  std::size_t mult = 1;
  for (int i = 0; i < 4; ++i) {
    if (!read_exact(fd, &c, 1)) return std::nullopt;
    const auto byte = static_cast<std::uint8_t>(c);
    len += (byte & 0x7F) * mult;
    mult *= 128;
    if (!(byte & 0x80)) break;
    if (i == 3) return std::nullopt;
  }
  p.body.resize(len);
  if (len > 0 && !read_exact(fd, p.body.data(), len)) return std::nullopt;
  return p;
}

bool write_all(int fd, std::string_view data) {
  std::size_t sent = 0;
  while (sent < data.size()) {
    const ssize_t r = ::send(fd, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
    if (r < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    sent += static_cast<std::size_t>(r);
  }
  return true;
}

std::string encode_publish(const PublishPacket& p) {
  std::uint8_t header = kPublish << 4;
  if (p.dup) header |= 0x08;
  header |= static_cast<std::uint8_t>(p.qos << 1);
  if (p.retain) header |= 0x01;
  std::string body;
  put_string(body, p.topic);
  if (p.qos > 0) put_u16(body, p.packet_id);
  body += p.payload;
  return frame(header, body);
}

PublishPacket decode_publish(const Packet& pkt) {
  PublishPacket p;
  p.dup = pkt.flags() & 0x08;
  p.qos = (pkt.flags() >> 1) & 0x03;
  p.retain = pkt.flags() & 0x01;
  Reader r(pkt.body);
  p.topic = r.str();
  if (p.qos > 0) p.packet_id = r.u16();
  p.payload = r.rest();
  return p;
}

}  // namespace le3d::mqtt

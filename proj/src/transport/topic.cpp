#include "le3d/transport/topic.hpp"

#include <array>

#include "le3d/error.hpp"

namespace le3d {
namespace {

constexpr std::array<std::string_view, 7> kChannelNames = {
    "data", "decision", "aggregate", "class", "control", "controlack", "relay"};

std::vector<std::string_view> split(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = s.find('/', start);
    out.push_back(s.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

}  // namespace

std::string_view to_string(Channel c) noexcept { return kChannelNames[static_cast<std::size_t>(c)]; }

Channel parse_channel(std::string_view s) {
  for (std::size_t i = 0; i < kChannelNames.size(); ++i) {
    if (kChannelNames[i] == s) return static_cast<Channel>(i);
  }
  throw InputError("unknown channel '" + std::string(s) + "'");
}

std::size_t channel_arity(Channel c) noexcept { return c == Channel::Decision ? 2 : 1; }

bool is_valid_segment(std::string_view s) noexcept {
  if (s.empty()) return false;
  for (char c : s) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                    c == '_' || c == '-';
    if (!ok) return false;
  }
  return true;
}

std::string topic_for(Channel channel, std::string_view site, std::span<const std::string> ids) {
  if (ids.size() != channel_arity(channel)) {
    throw InputError("channel '" + std::string(to_string(channel)) + "' takes " +
                     std::to_string(channel_arity(channel)) + " id segment(s), got " +
                     std::to_string(ids.size()));
  }
  if (!is_valid_segment(site)) throw InputError("invalid site segment '" + std::string(site) + "'");
  std::string out = "le3d/";
  out += to_string(channel);
  out += '/';
  out += site;
  for (const auto& id : ids) {
    if (!is_valid_segment(id)) throw InputError("invalid id segment '" + id + "'");
    out += '/';
    out += id;
  }
  return out;
}

std::string topic_for(Channel channel, std::string_view site, std::initializer_list<std::string> ids) {
  return topic_for(channel, site, std::span<const std::string>(ids.begin(), ids.size()));
}

std::string Topic::str() const { return topic_for(channel, site, ids); }

Topic parse_topic(std::string_view topic) {
  const auto parts = split(topic);
  if (parts.size() < 4 || parts[0] != "le3d") {
    throw InputError("topic '" + std::string(topic) + "' does not follow le3d/<channel>/<site>/<id>");
  }
  Topic t;
  t.channel = parse_channel(parts[1]);
  t.site = std::string(parts[2]);
  for (std::size_t i = 3; i < parts.size(); ++i) t.ids.emplace_back(parts[i]);
  // Re-validate through the constructor.
  (void)t.str();
  return t;
}

bool topic_matches(std::string_view filter, std::string_view topic) {
  const auto f = split(filter);
  const auto t = split(topic);
  std::size_t i = 0;
  for (; i < f.size(); ++i) {
    if (f[i] == "#") return true;
    if (i >= t.size()) return false;
    if (f[i] != "+" && f[i] != t[i]) return false;
  }
  return i == t.size();
}

}  // namespace le3d

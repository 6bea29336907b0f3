#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace le3d {

/// Topic grammar: le3d/<channel>/<site>/<id...>
enum class Channel { Data, Decision, Aggregate, Class, Control, ControlAck, Relay };

std::string_view to_string(Channel c) noexcept;
Channel parse_channel(std::string_view s);

/// Number of id segments a channel carries (decision: detector_id, stream_id).
std::size_t channel_arity(Channel c) noexcept;

/// Site segment used for commands addressed to every emulator of a sensor type.
inline constexpr std::string_view kBroadcastSite = "all";

struct Topic {
  Channel channel = Channel::Data;
  std::string site;
  std::vector<std::string> ids;

  std::string str() const;
  friend bool operator==(const Topic&, const Topic&) = default;
};

/// True when every character is in [A-Za-z0-9_-] and the segment is nonempty.
bool is_valid_segment(std::string_view s) noexcept;

/// Throws InputError on bad charset or arity.
std::string topic_for(Channel channel, std::string_view site, std::span<const std::string> ids);
std::string topic_for(Channel channel, std::string_view site, std::initializer_list<std::string> ids);

/// Inverse of topic_for. Throws InputError.
Topic parse_topic(std::string_view topic);

/// MQTT filter matching with '+' (one level) and '#' (remaining levels).
bool topic_matches(std::string_view filter, std::string_view topic);

}  // namespace le3d

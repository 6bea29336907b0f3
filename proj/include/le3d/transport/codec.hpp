#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <variant>

#include "le3d/aggregator/types.hpp"
#include "le3d/datagen/types.hpp"
#include "le3d/detector/types.hpp"
#include "le3d/error.hpp"

namespace le3d {

inline constexpr std::uint32_t kSchemaVersion = 1;

enum class MessageKind { Sample, Decision, Aggregate, Classification, Command, Ack };

std::string_view to_string(MessageKind k) noexcept;

/// Whether messages of this kind travel as retained messages.
bool is_retained_kind(MessageKind k) noexcept;

using Body = std::variant<Sample, DriftDecision, AggregateShare, ClassReport, DriftCommand, CommandAck>;

struct Envelope {
  std::uint32_t schema_version = kSchemaVersion;
  Body body;
  bool retained = false;

  MessageKind kind() const noexcept { return static_cast<MessageKind>(body.index()); }
  friend bool operator==(const Envelope&, const Envelope&) = default;
};

/// Envelope with `retained` set according to the message kind.
Envelope make_envelope(Body body);

/// JSON text. Throws InputError if the envelope violates the retained rule.
std::string encode(const Envelope& envelope);

/// Throws DecodeError naming the first offending field. Unknown fields are ignored.
Envelope decode(std::string_view bytes);

/// Decodes and checks the body type; throws DecodeError("kind") on mismatch.
template <class T>
T decode_as(std::string_view bytes) {
  Envelope e = decode(bytes);
  if (auto* p = std::get_if<T>(&e.body)) return std::move(*p);
  throw DecodeError("kind", "unexpected message kind '" + std::string(to_string(e.kind())) + "'");
}

}  // namespace le3d

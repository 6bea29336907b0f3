#include "le3d/transport/codec.hpp"

#include <array>

#include "le3d/error.hpp"
#include "le3d/transport/json_codec.hpp"

namespace le3d {
namespace {

constexpr std::array<std::string_view, 6> kKindNames = {"sample", "decision", "aggregate",
                                                        "class",  "command",  "ack"};

}  // namespace

std::string_view to_string(MessageKind k) noexcept { return kKindNames[static_cast<std::size_t>(k)]; }

bool is_retained_kind(MessageKind k) noexcept {
  return k == MessageKind::Decision || k == MessageKind::Aggregate || k == MessageKind::Classification;
}

Envelope make_envelope(Body body) {
  Envelope e;
  e.body = std::move(body);
  e.retained = is_retained_kind(e.kind());
  return e;
}

std::string encode(const Envelope& envelope) {
  if (envelope.retained != is_retained_kind(envelope.kind())) {
    throw InputError("envelope of kind '" + std::string(to_string(envelope.kind())) +
                     "' must have retained=" + (is_retained_kind(envelope.kind()) ? "true" : "false"));
  }
  if (envelope.schema_version != kSchemaVersion) throw InputError("unsupported schema_version");
  nlohmann::json j = {{"schema_version", envelope.schema_version},
                      {"kind", std::string(to_string(envelope.kind()))},
                      {"retained", envelope.retained},
                      {"body", wire::body_to_json(envelope.body)}};
  return j.dump();
}

Envelope decode(std::string_view bytes) {
  nlohmann::json j = nlohmann::json::parse(bytes, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded()) throw DecodeError("", "payload is not valid JSON");
  if (!j.is_object()) throw DecodeError("", "payload must be a JSON object");

  auto sv = j.find("schema_version");
  if (sv == j.end() || !sv->is_number_unsigned()) {
    throw DecodeError("schema_version", "missing or invalid field 'schema_version'");
  }
  if (sv->get<std::uint64_t>() != kSchemaVersion) {
    throw DecodeError("schema_version", "unsupported schema_version " + sv->dump());
  }
  auto kind_it = j.find("kind");
  if (kind_it == j.end() || !kind_it->is_string()) throw DecodeError("kind", "missing or invalid field 'kind'");
  const std::string kind = kind_it->get<std::string>();
  auto body_it = j.find("body");
  if (body_it == j.end() || !body_it->is_object()) throw DecodeError("body", "missing or invalid field 'body'");
  const auto& body = *body_it;

  Envelope e;
  if (kind == "sample") {
    e.body = wire::sample_from_json(body);
  } else if (kind == "decision") {
    e.body = wire::decision_from_json(body);
  } else if (kind == "aggregate") {
    e.body = wire::share_from_json(body);
  } else if (kind == "class") {
    e.body = wire::class_report_from_json(body);
  } else if (kind == "command") {
    e.body = wire::command_from_json(body);
  } else if (kind == "ack") {
    e.body = wire::ack_from_json(body);
  } else {
    throw DecodeError("kind", "unknown message kind '" + kind + "'");
  }

  auto ret = j.find("retained");
  if (ret == j.end() || !ret->is_boolean()) throw DecodeError("retained", "missing or invalid field 'retained'");
  e.retained = ret->get<bool>();
  if (e.retained != is_retained_kind(e.kind())) {
    throw DecodeError("retained", "retained flag does not match message kind '" + kind + "'");
  }
  return e;
}

}  // namespace le3d

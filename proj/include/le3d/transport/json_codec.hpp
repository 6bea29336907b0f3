#pragma once

// Field-level JSON mapping of the wire types. Used by the envelope codec and
// by the coordination REST surface.

#include "json.hpp"
#include "le3d/transport/codec.hpp"

namespace le3d::wire {

using nlohmann::json;

json to_json(const KsResult& v);
json to_json(const SampleMetadata& v);
json to_json(const Sample& v);
json to_json(const DriftDecision& v);
json to_json(const AggregateShare& v);
json to_json(const ClassReport& v);
json to_json(const DriftCommand& v);
json to_json(const CommandAck& v);
json to_json(const StreamProfile& v);

/// Readers take the parent path for error messages ("body", "body.ks", ...).
KsResult ks_from_json(const json& j, const std::string& path);
SampleMetadata metadata_from_json(const json& j, const std::string& path);
Sample sample_from_json(const json& j, const std::string& path = "body");
DriftDecision decision_from_json(const json& j, const std::string& path = "body");
AggregateShare share_from_json(const json& j, const std::string& path = "body");
ClassReport class_report_from_json(const json& j, const std::string& path = "body");
DriftCommand command_from_json(const json& j, const std::string& path = "body");
CommandAck ack_from_json(const json& j, const std::string& path = "body");
StreamProfile profile_from_json(const json& j, const std::string& path = "profile");

json body_to_json(const Body& body);

}  // namespace le3d::wire

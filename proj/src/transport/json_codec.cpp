#include "le3d/transport/json_codec.hpp"

#include <cmath>

#include "le3d/error.hpp"
#include "le3d/transport/topic.hpp"

namespace le3d::wire {
namespace {

std::string join(const std::string& path, std::string_view key) {
  return path.empty() ? std::string(key) : path + "." + std::string(key);
}

const json& field(const json& j, std::string_view key, const std::string& path) {
  if (!j.is_object()) throw DecodeError(path, "'" + path + "' must be an object");
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) {
    throw DecodeError(join(path, key), "missing required field '" + join(path, key) + "'");
  }
  return *it;
}

std::string get_string(const json& j, std::string_view key, const std::string& path) {
  const json& v = field(j, key, path);
  if (!v.is_string()) throw DecodeError(join(path, key), "field '" + join(path, key) + "' must be a string");
  return v.get<std::string>();
}

std::string get_segment(const json& j, std::string_view key, const std::string& path) {
  std::string s = get_string(j, key, path);
  if (!is_valid_segment(s)) {
    throw DecodeError(join(path, key), "field '" + join(path, key) + "' must match [A-Za-z0-9_-]+");
  }
  return s;
}

std::int64_t get_int(const json& j, std::string_view key, const std::string& path) {
  const json& v = field(j, key, path);
  if (!v.is_number_integer()) {
    throw DecodeError(join(path, key), "field '" + join(path, key) + "' must be an integer");
  }
  return v.get<std::int64_t>();
}

std::uint64_t get_uint(const json& j, std::string_view key, const std::string& path) {
  const json& v = field(j, key, path);
  if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0)) {
    throw DecodeError(join(path, key), "field '" + join(path, key) + "' must be a nonnegative integer");
  }
  return v.get<std::uint64_t>();
}

double get_double(const json& j, std::string_view key, const std::string& path) {
  const json& v = field(j, key, path);
  if (!v.is_number()) throw DecodeError(join(path, key), "field '" + join(path, key) + "' must be a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw DecodeError(join(path, key), "field '" + join(path, key) + "' must be finite");
  return d;
}

bool get_bool(const json& j, std::string_view key, const std::string& path) {
  const json& v = field(j, key, path);
  if (!v.is_boolean()) throw DecodeError(join(path, key), "field '" + join(path, key) + "' must be a boolean");
  return v.get<bool>();
}

template <class F>
auto get_enum(const json& j, std::string_view key, const std::string& path, F parse) {
  const std::string s = get_string(j, key, path);
  try {
    return parse(s);
  } catch (const Error& e) {
    throw DecodeError(join(path, key), "field '" + join(path, key) + "': " + e.what());
  }
}

}  // namespace

json to_json(const KsResult& v) {
  return {{"statistic_d", v.statistic_d},
          {"p_value", v.p_value},
          {"n_recent", v.n_recent},
          {"n_reference", v.n_reference}};
}

json to_json(const SampleMetadata& v) {
  json extra = json::object();
  for (const auto& [k, val] : v.extra) extra[k] = val;
  return {{"sensor_type", v.sensor_type}, {"unit", v.unit}, {"extra", std::move(extra)}};
}

json to_json(const Sample& v) {
  return {{"stream_id", v.stream_id}, {"site", v.site},   {"timestamp", v.timestamp},
          {"value", v.value},         {"seq", v.seq},     {"metadata", to_json(v.metadata)}};
}

json to_json(const DriftDecision& v) {
  json votes = json::object();
  for (const auto& [kind, vote] : v.votes) votes[std::string(to_string(kind))] = vote;
  return {{"stream_id", v.stream_id},
          {"detector_id", v.detector_id},
          {"site", v.site},
          {"decided_at", v.decided_at},
          {"drifting", v.drifting},
          {"votes", std::move(votes)},
          {"ks", to_json(v.ks)},
          {"metadata", to_json(v.metadata)},
          {"seq_at_decision", v.seq_at_decision}};
}

json to_json(const AggregateShare& v) {
  return {{"origin_detector_id", v.origin_detector_id},
          {"origin_aggregator_id", v.origin_aggregator_id},
          {"stream_id", v.stream_id},
          {"sensor_type", v.sensor_type},
          {"site", v.site},
          {"drifting", v.drifting},
          {"decided_at", v.decided_at},
          {"ks", to_json(v.ks)},
          {"share_seq", v.share_seq}};
}

json to_json(const ClassReport& v) {
  return {{"aggregator_id", v.aggregator_id},
          {"site", v.site},
          {"stream_id", v.stream_id},
          {"evaluated_at", v.evaluated_at},
          {"class", std::string(to_string(v.drift_class.kind))},
          {"evidence",
           {{"concurrent_peers", v.drift_class.concurrent_peers},
            {"window_ms", v.drift_class.window_ms},
            {"contributing_streams", v.drift_class.contributing_streams}}}};
}

json to_json(const DriftCommand& v) {
  return {{"target", v.target},
          {"kind", std::string(to_string(v.kind))},
          {"magnitude", v.magnitude},
          {"duration_ms", v.duration_ms},
          {"issued_at", v.issued_at},
          {"scope", std::string(to_string(v.scope))}};
}

json to_json(const CommandAck& v) {
  return {{"stream_id", v.stream_id}, {"target", v.target},
          {"kind", std::string(to_string(v.kind))},
          {"accepted", v.accepted},   {"reason", v.reason},
          {"acked_at", v.acked_at}};
}

json to_json(const StreamProfile& v) {
  return {{"mean", v.mean},
          {"stddev", v.stddev},
          {"sample_period_ms", v.sample_period_ms},
          {"noise_model", std::string(to_string(v.noise_model))},
          {"seed", v.seed},
          {"sensor_type", v.sensor_type},
          {"unit", v.unit}};
}

KsResult ks_from_json(const json& j, const std::string& path) {
  KsResult r;
  r.statistic_d = get_double(j, "statistic_d", path);
  r.p_value = get_double(j, "p_value", path);
  r.n_recent = static_cast<std::uint32_t>(get_uint(j, "n_recent", path));
  r.n_reference = static_cast<std::uint32_t>(get_uint(j, "n_reference", path));
  if (r.statistic_d < 0.0 || r.statistic_d > 1.0) {
    throw DecodeError(join(path, "statistic_d"), "statistic_d must be in [0,1]");
  }
  if (r.p_value < 0.0 || r.p_value > 1.0) throw DecodeError(join(path, "p_value"), "p_value must be in [0,1]");
  return r;
}

SampleMetadata metadata_from_json(const json& j, const std::string& path) {
  SampleMetadata m;
  m.sensor_type = get_string(j, "sensor_type", path);
  m.unit = get_string(j, "unit", path);
  if (auto it = j.find("extra"); it != j.end() && !it->is_null()) {
    if (!it->is_object()) throw DecodeError(join(path, "extra"), "field 'extra' must be an object");
    for (const auto& [k, val] : it->items()) {
      if (!val.is_string()) throw DecodeError(join(path, "extra." + k), "extra values must be strings");
      m.extra[k] = val.get<std::string>();
    }
  }
  return m;
}

Sample sample_from_json(const json& j, const std::string& path) {
  Sample s;
  s.stream_id = get_segment(j, "stream_id", path);
  s.site = get_segment(j, "site", path);
  s.timestamp = get_int(j, "timestamp", path);
  if (s.timestamp < 0) throw DecodeError(join(path, "timestamp"), "timestamp must be nonnegative");
  s.value = get_double(j, "value", path);
  s.seq = get_uint(j, "seq", path);
  s.metadata = metadata_from_json(field(j, "metadata", path), join(path, "metadata"));
  return s;
}

DriftDecision decision_from_json(const json& j, const std::string& path) {
  DriftDecision d;
  d.stream_id = get_segment(j, "stream_id", path);
  d.detector_id = get_segment(j, "detector_id", path);
  d.site = get_segment(j, "site", path);
  d.decided_at = get_int(j, "decided_at", path);
  d.drifting = get_bool(j, "drifting", path);
  const json& votes = field(j, "votes", path);
  if (!votes.is_object()) throw DecodeError(join(path, "votes"), "field 'votes' must be an object");
  for (const auto& [k, v] : votes.items()) {
    if (!v.is_boolean()) throw DecodeError(join(path, "votes." + k), "votes must be booleans");
    try {
      d.votes[parse_estimator_kind(k)] = v.get<bool>();
    } catch (const Error& e) {
      throw DecodeError(join(path, "votes." + k), e.what());
    }
  }
  d.ks = ks_from_json(field(j, "ks", path), join(path, "ks"));
  d.metadata = metadata_from_json(field(j, "metadata", path), join(path, "metadata"));
  d.seq_at_decision = get_uint(j, "seq_at_decision", path);
  return d;
}

AggregateShare share_from_json(const json& j, const std::string& path) {
  AggregateShare s;
  s.origin_detector_id = get_segment(j, "origin_detector_id", path);
  s.origin_aggregator_id = get_segment(j, "origin_aggregator_id", path);
  s.stream_id = get_segment(j, "stream_id", path);
  s.sensor_type = get_string(j, "sensor_type", path);
  s.site = get_segment(j, "site", path);
  s.drifting = get_bool(j, "drifting", path);
  s.decided_at = get_int(j, "decided_at", path);
  s.ks = ks_from_json(field(j, "ks", path), join(path, "ks"));
  s.share_seq = get_uint(j, "share_seq", path);
  return s;
}

ClassReport class_report_from_json(const json& j, const std::string& path) {
  ClassReport r;
  r.aggregator_id = get_segment(j, "aggregator_id", path);
  r.site = get_segment(j, "site", path);
  r.stream_id = get_segment(j, "stream_id", path);
  r.evaluated_at = get_int(j, "evaluated_at", path);
  r.drift_class.kind = get_enum(j, "class", path, parse_drift_class);
  const std::string ev_path = join(path, "evidence");
  const json& ev = field(j, "evidence", path);
  r.drift_class.concurrent_peers = static_cast<std::uint32_t>(get_uint(ev, "concurrent_peers", ev_path));
  r.drift_class.window_ms = get_int(ev, "window_ms", ev_path);
  const json& streams = field(ev, "contributing_streams", ev_path);
  if (!streams.is_array()) {
    throw DecodeError(join(ev_path, "contributing_streams"), "contributing_streams must be an array");
  }
  for (const auto& s : streams) {
    if (!s.is_string()) {
      throw DecodeError(join(ev_path, "contributing_streams"), "contributing_streams must hold strings");
    }
    r.drift_class.contributing_streams.push_back(s.get<std::string>());
  }
  return r;
}

DriftCommand command_from_json(const json& j, const std::string& path) {
  DriftCommand c;
  c.target = get_segment(j, "target", path);
  c.kind = get_enum(j, "kind", path, parse_drift_kind);
  c.magnitude = get_double(j, "magnitude", path);
  c.duration_ms = get_int(j, "duration_ms", path);
  if (c.duration_ms < 0) throw DecodeError(join(path, "duration_ms"), "duration_ms must be nonnegative");
  c.issued_at = get_int(j, "issued_at", path);
  c.scope = get_enum(j, "scope", path, parse_drift_scope);
  return c;
}

CommandAck ack_from_json(const json& j, const std::string& path) {
  CommandAck a;
  a.stream_id = get_segment(j, "stream_id", path);
  a.target = get_string(j, "target", path);
  a.kind = get_enum(j, "kind", path, parse_drift_kind);
  a.accepted = get_bool(j, "accepted", path);
  a.reason = get_string(j, "reason", path);
  a.acked_at = get_int(j, "acked_at", path);
  return a;
}

StreamProfile profile_from_json(const json& j, const std::string& path) {
  StreamProfile p;
  p.mean = get_double(j, "mean", path);
  p.stddev = get_double(j, "stddev", path);
  p.sample_period_ms = get_int(j, "sample_period_ms", path);
  p.noise_model = get_enum(j, "noise_model", path, parse_noise_model);
  p.seed = get_uint(j, "seed", path);
  p.sensor_type = get_segment(j, "sensor_type", path);
  p.unit = get_string(j, "unit", path);
  try {
    p.validate();
  } catch (const ConfigError& e) {
    throw DecodeError(path, e.what());
  }
  return p;
}

json body_to_json(const Body& body) {
  return std::visit([](const auto& b) { return to_json(b); }, body);
}

}  // namespace le3d::wire

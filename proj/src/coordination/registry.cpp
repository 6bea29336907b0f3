#include "le3d/coordination/registry.hpp"

#include <algorithm>
#include <cstdio>

#include "le3d/error.hpp"
#include "le3d/transport/json_codec.hpp"
#include "le3d/transport/topic.hpp"

namespace le3d {

using nlohmann::json;

std::string_view to_string(EntityKind k) noexcept {
  switch (k) {
    case EntityKind::Endpoint: return "endpoint";
    case EntityKind::Emulator: return "emulator";
    case EntityKind::Streamer: return "streamer";
    case EntityKind::Detector: return "detector";
    case EntityKind::Aggregator: return "aggregator";
  }
  return "endpoint";
}

EntityKind parse_entity_kind(std::string_view s) {
  for (auto k : {EntityKind::Endpoint, EntityKind::Emulator, EntityKind::Streamer, EntityKind::Detector,
                 EntityKind::Aggregator}) {
    if (s == to_string(k)) return k;
  }
  throw InputError("unknown entity kind '" + std::string(s) + "'");
}

std::string_view to_string(StateKind k) noexcept {
  return k == StateKind::Decision ? "decision" : "classification";
}

StateKind parse_state_kind(std::string_view s) {
  if (s == "decision") return StateKind::Decision;
  if (s == "classification") return StateKind::Classification;
  throw InputError("unknown state kind '" + std::string(s) + "'");
}

std::uint64_t EventHub::publish(std::string name, json data) {
  std::uint64_t id;
  {
    std::lock_guard lock(mutex_);
    id = next_id_++;
    events_.push_back(Event{id, std::move(name), std::move(data)});
    while (events_.size() > capacity_) events_.pop_front();
  }
  cv_.notify_all();
  return id;
}

std::vector<Event> EventHub::wait_after(std::uint64_t after, std::int64_t timeout_ms) {
  std::unique_lock lock(mutex_);
  cv_.wait_for(lock, std::chrono::milliseconds(timeout_ms),
               [&] { return closed_ || (!events_.empty() && events_.back().id > after); });
  std::vector<Event> out;
  for (const auto& e : events_) {
    if (e.id > after) out.push_back(e);
  }
  return out;
}

std::uint64_t EventHub::last_id() const {
  std::lock_guard lock(mutex_);
  return next_id_ - 1;
}

void EventHub::close() {
  {
    std::lock_guard lock(mutex_);
    closed_ = true;
  }
  cv_.notify_all();
}

bool EventHub::closed() const {
  std::lock_guard lock(mutex_);
  return closed_;
}

Registry::Registry(RegistryConfig config, Clock clock, EventHub* events)
    : config_(config), clock_(std::move(clock)), events_(events) {
  if (config_.liveness_window_ms <= 0) throw ConfigError("liveness window must be > 0");
  if (config_.history == 0) throw ConfigError("history capacity must be > 0");
  if (config_.series == 0) throw ConfigError("series capacity must be > 0");
}

void Registry::emit(std::string name, json data) {
  if (events_) events_->publish(std::move(name), std::move(data));
}

bool Registry::is_live(const Entity& e, TimestampMs now) const {
  return now - e.heartbeat_at <= config_.liveness_window_ms;
}

Entity Registry::register_entity(EntityKind kind, const std::string& site,
                                 const std::optional<std::string>& sensor_type) {
  if (!is_valid_segment(site)) throw InputError("invalid site '" + site + "'");
  if (sensor_type && !is_valid_segment(*sensor_type)) throw InputError("invalid sensor_type '" + *sensor_type + "'");
  Entity e;
  {
    std::lock_guard lock(mutex_);
    char id[64];
    std::snprintf(id, sizeof id, "%s-%06llu", std::string(to_string(kind)).c_str(),
                  static_cast<unsigned long long>(++counter_));
    e.entity_id = id;
    e.kind = kind;
    e.site = site;
    e.sensor_type = sensor_type;
    e.announced_at = e.heartbeat_at = clock_();
    entities_.emplace(e.entity_id, e);
  }
  emit("entity", to_json(EntityView{e, true}));
  return e;
}

Entity Registry::heartbeat(const std::string& entity_id) {
  std::lock_guard lock(mutex_);
  auto it = entities_.find(entity_id);
  if (it == entities_.end()) throw NotFoundError("unknown entity '" + entity_id + "'");
  it->second.heartbeat_at = std::max(it->second.heartbeat_at, clock_());
  return it->second;
}

std::optional<EntityView> Registry::entity(const std::string& entity_id) const {
  std::lock_guard lock(mutex_);
  auto it = entities_.find(entity_id);
  if (it == entities_.end()) return std::nullopt;
  return EntityView{it->second, is_live(it->second, clock_())};
}

std::vector<EntityView> Registry::list_entities(const std::optional<EntityKind>& kind,
                                                const std::optional<std::string>& site) const {
  std::lock_guard lock(mutex_);
  const auto now = clock_();
  std::vector<EntityView> out;
  for (const auto& [id, e] : entities_) {
    if (kind && e.kind != *kind) continue;
    if (site && e.site != *site) continue;
    out.push_back(EntityView{e, is_live(e, now)});
  }
  return out;
}

Assignment Registry::assign(const std::string& source_entity_id, const std::string& stream_id) {
  if (!is_valid_segment(stream_id)) throw InputError("invalid stream_id '" + stream_id + "'");
  Assignment a;
  {
    std::lock_guard lock(mutex_);
    auto src = entities_.find(source_entity_id);
    if (src == entities_.end()) throw NotFoundError("unknown source entity '" + source_entity_id + "'");
    const auto kind = src->second.kind;
    if (kind == EntityKind::Detector || kind == EntityKind::Aggregator) {
      throw InputError("entity '" + source_entity_id + "' is not a stream source");
    }
    if (auto it = assignments_.find(stream_id); it != assignments_.end()) return it->second;

    const auto now = clock_();
    const std::string& site = src->second.site;
    std::map<std::string, std::size_t> load;
    for (const auto& [id, e] : entities_) {
      if (e.kind == EntityKind::Detector && e.site == site && is_live(e, now)) load[id] = 0;
    }
    if (load.empty()) throw ConflictError("no detector available");
    for (const auto& [sid, existing] : assignments_) {
      if (auto it = load.find(existing.detector_entity_id); it != load.end()) ++it->second;
    }
    auto best = std::min_element(load.begin(), load.end(),
                                 [](const auto& l, const auto& r) { return l.second < r.second; });
    a.source_entity_id = source_entity_id;
    a.detector_entity_id = best->first;
    a.stream_id = stream_id;
    a.site = site;
    a.created_at = now;
    assignments_.emplace(stream_id, a);
    auto& info = stream_locked(stream_id);
    info.site = site;
    info.detector_entity_id = a.detector_entity_id;
    if (src->second.sensor_type && info.sensor_type.empty()) info.sensor_type = *src->second.sensor_type;
  }
  emit("assignment", to_json(a));
  return a;
}

std::vector<Assignment> Registry::list_assignments(const std::optional<std::string>& site) const {
  std::lock_guard lock(mutex_);
  std::vector<Assignment> out;
  for (const auto& [sid, a] : assignments_) {
    if (!site || a.site == *site) out.push_back(a);
  }
  std::stable_sort(out.begin(), out.end(), [](const Assignment& l, const Assignment& r) {
    return l.created_at != r.created_at ? l.created_at < r.created_at : l.stream_id < r.stream_id;
  });
  return out;
}

std::map<std::string, std::size_t> Registry::detector_loads(const std::string& site) const {
  std::lock_guard lock(mutex_);
  std::map<std::string, std::size_t> load;
  for (const auto& [id, e] : entities_) {
    if (e.kind == EntityKind::Detector && e.site == site) load[id] = 0;
  }
  for (const auto& [sid, a] : assignments_) {
    if (auto it = load.find(a.detector_entity_id); it != load.end()) ++it->second;
  }
  return load;
}

StreamInfo& Registry::stream_locked(const std::string& stream_id) {
  auto [it, inserted] = streams_.try_emplace(stream_id);
  if (inserted) it->second.stream_id = stream_id;
  return it->second;
}

void Registry::store_locked(StateKind kind, const std::string& stream_id, json body) {
  auto& ring = state_[{kind, stream_id}];
  ring.push_back(std::move(body));
  while (ring.size() > config_.history) ring.pop_front();
}

void Registry::record_state(StateKind kind, const json& payload) {
  if (kind == StateKind::Decision) {
    record_decision(wire::decision_from_json(payload, "body"));
  } else {
    record_class(wire::class_report_from_json(payload, "body"));
  }
}

void Registry::record_decision(const DriftDecision& decision) {
  json body = wire::to_json(decision);
  {
    std::lock_guard lock(mutex_);
    auto& info = stream_locked(decision.stream_id);
    info.site = decision.site;
    info.drifting = decision.drifting;
    if (!decision.metadata.sensor_type.empty()) info.sensor_type = decision.metadata.sensor_type;
    store_locked(StateKind::Decision, decision.stream_id, body);
  }
  emit("decision", std::move(body));
}

void Registry::record_class(const ClassReport& report) {
  json body = wire::to_json(report);
  {
    std::lock_guard lock(mutex_);
    auto& info = stream_locked(report.stream_id);
    if (info.site.empty()) info.site = report.site;
    info.drift_class = report.drift_class.kind;
    store_locked(StateKind::Classification, report.stream_id, body);
  }
  emit("classification", std::move(body));
}

void Registry::record_sample(const Sample& sample) {
  {
    std::lock_guard lock(mutex_);
    auto& info = stream_locked(sample.stream_id);
    info.site = sample.site;
    info.relayed = true;
    if (!sample.metadata.sensor_type.empty()) info.sensor_type = sample.metadata.sensor_type;
    auto& ring = series_[sample.stream_id];
    ring.push_back(SeriesPoint{sample.timestamp, sample.value});
    while (ring.size() > config_.series) ring.pop_front();
  }
  emit("sample", json{{"stream_id", sample.stream_id}, {"timestamp", sample.timestamp}, {"value", sample.value}});
}

void Registry::record_ack(const CommandAck& ack) { emit("ack", wire::to_json(ack)); }

std::optional<json> Registry::latest(StateKind kind, const std::string& stream_id) const {
  std::lock_guard lock(mutex_);
  auto it = state_.find({kind, stream_id});
  if (it == state_.end() || it->second.empty()) return std::nullopt;
  return it->second.back();
}

std::vector<json> Registry::history(StateKind kind, const std::string& stream_id) const {
  std::lock_guard lock(mutex_);
  auto it = state_.find({kind, stream_id});
  if (it == state_.end()) return {};
  return {it->second.begin(), it->second.end()};
}

std::vector<SeriesPoint> Registry::series(const std::string& stream_id) const {
  std::lock_guard lock(mutex_);
  auto it = series_.find(stream_id);
  if (it == series_.end()) return {};
  return {it->second.begin(), it->second.end()};
}

std::vector<StreamInfo> Registry::streams() const {
  std::lock_guard lock(mutex_);
  std::vector<StreamInfo> out;
  for (const auto& [id, info] : streams_) out.push_back(info);
  return out;
}

std::optional<std::string> Registry::site_of_stream(const std::string& stream_id) const {
  std::lock_guard lock(mutex_);
  auto it = streams_.find(stream_id);
  if (it == streams_.end() || it->second.site.empty()) return std::nullopt;
  return it->second.site;
}

json to_json(const Entity& e) {
  json j{{"entity_id", e.entity_id},
         {"kind", to_string(e.kind)},
         {"site", e.site},
         {"announced_at", e.announced_at},
         {"heartbeat_at", e.heartbeat_at}};
  j["sensor_type"] = e.sensor_type ? json(*e.sensor_type) : json(nullptr);
  return j;
}

json to_json(const EntityView& v) {
  json j = to_json(v.entity);
  j["live"] = v.live;
  j["stale"] = !v.live;
  return j;
}

json to_json(const Assignment& a) {
  return json{{"source_entity_id", a.source_entity_id},
              {"detector_entity_id", a.detector_entity_id},
              {"stream_id", a.stream_id},
              {"site", a.site},
              {"created_at", a.created_at}};
}

json to_json(const StreamInfo& s) {
  json j{{"stream_id", s.stream_id}, {"site", s.site}, {"sensor_type", s.sensor_type}, {"relayed", s.relayed}};
  j["detector_entity_id"] = s.detector_entity_id ? json(*s.detector_entity_id) : json(nullptr);
  j["drifting"] = s.drifting ? json(*s.drifting) : json(nullptr);
  j["drift_class"] = s.drift_class ? json(to_string(*s.drift_class)) : json(nullptr);
  return j;
}

}  // namespace le3d

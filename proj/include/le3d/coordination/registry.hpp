#pragma once

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "le3d/aggregator/types.hpp"
#include "le3d/clock.hpp"
#include "le3d/datagen/types.hpp"
#include "le3d/detector/types.hpp"

namespace le3d {

enum class EntityKind { Endpoint, Emulator, Streamer, Detector, Aggregator };

std::string_view to_string(EntityKind k) noexcept;
/// Throws InputError for unknown names.
EntityKind parse_entity_kind(std::string_view s);

struct Entity {
  std::string entity_id;
  EntityKind kind = EntityKind::Endpoint;
  std::string site;
  std::optional<std::string> sensor_type;
  TimestampMs announced_at = 0;
  TimestampMs heartbeat_at = 0;

  friend bool operator==(const Entity&, const Entity&) = default;
};

struct EntityView {
  Entity entity;
  bool live = false;
};

struct Assignment {
  std::string source_entity_id;
  std::string detector_entity_id;
  std::string stream_id;
  std::string site;
  TimestampMs created_at = 0;

  friend bool operator==(const Assignment&, const Assignment&) = default;
};

enum class StateKind { Decision, Classification };

std::string_view to_string(StateKind k) noexcept;
/// Accepts "decision" and "classification"; throws InputError otherwise.
StateKind parse_state_kind(std::string_view s);

struct SeriesPoint {
  TimestampMs timestamp = 0;
  double value = 0.0;
};

/// Everything the coordinator knows about one stream.
struct StreamInfo {
  std::string stream_id;
  std::string site;
  std::string sensor_type;
  std::optional<std::string> detector_entity_id;
  std::optional<bool> drifting;
  std::optional<DriftClassKind> drift_class;
  bool relayed = false;
};

struct Event {
  std::uint64_t id = 0;
  std::string name;
  nlohmann::json data;
};

/// Bounded, ordered log of notifications for server-push clients.
class EventHub {
 public:
  explicit EventHub(std::size_t capacity = 1000) : capacity_(capacity) {}

  std::uint64_t publish(std::string name, nlohmann::json data);

  /// Events with id > `after`, waiting up to `timeout_ms` for at least one.
  std::vector<Event> wait_after(std::uint64_t after, std::int64_t timeout_ms);

  std::uint64_t last_id() const;

  /// Wakes all waiters and makes further waits return immediately.
  void close();
  bool closed() const;

 private:
  std::size_t capacity_;
  mutable std::mutex mutex_;
  std::condition_variable cv_;
  std::deque<Event> events_;
  std::uint64_t next_id_ = 1;
  bool closed_ = false;
};

struct RegistryConfig {
  std::int64_t liveness_window_ms = 60000;
  std::size_t history = 1000;
  std::size_t series = 2000;
};

/// Matching oracle and in-memory state store. All operations are linearized
/// by one lock.
class Registry {
 public:
  explicit Registry(RegistryConfig config = {}, Clock clock = wall_clock_ms, EventHub* events = nullptr);

  Entity register_entity(EntityKind kind, const std::string& site,
                         const std::optional<std::string>& sensor_type = std::nullopt);
  /// Throws NotFoundError.
  Entity heartbeat(const std::string& entity_id);
  std::optional<EntityView> entity(const std::string& entity_id) const;
  std::vector<EntityView> list_entities(const std::optional<EntityKind>& kind = std::nullopt,
                                        const std::optional<std::string>& site = std::nullopt) const;

  /// Least-loaded live detector at the source's site; ties go to the smallest
  /// id. Returns the existing assignment for an already-assigned stream.
  /// Throws NotFoundError for an unknown source and ConflictError when no
  /// detector is live.
  Assignment assign(const std::string& source_entity_id, const std::string& stream_id);
  std::vector<Assignment> list_assignments(const std::optional<std::string>& site = std::nullopt) const;
  /// Assignment count per detector entity (live or not) at `site`.
  std::map<std::string, std::size_t> detector_loads(const std::string& site) const;

  /// Validates `payload` as a decision or class report body and stores it.
  /// Throws DecodeError naming the offending field.
  void record_state(StateKind kind, const nlohmann::json& payload);
  void record_decision(const DriftDecision& decision);
  void record_class(const ClassReport& report);
  void record_sample(const Sample& sample);
  void record_ack(const CommandAck& ack);

  std::optional<nlohmann::json> latest(StateKind kind, const std::string& stream_id) const;
  std::vector<nlohmann::json> history(StateKind kind, const std::string& stream_id) const;
  std::vector<SeriesPoint> series(const std::string& stream_id) const;
  std::vector<StreamInfo> streams() const;
  std::optional<std::string> site_of_stream(const std::string& stream_id) const;

  const RegistryConfig& config() const noexcept { return config_; }
  TimestampMs now() const { return clock_(); }

 private:
  bool is_live(const Entity& e, TimestampMs now) const;
  StreamInfo& stream_locked(const std::string& stream_id);
  void store_locked(StateKind kind, const std::string& stream_id, nlohmann::json body);
  void emit(std::string name, nlohmann::json data);

  RegistryConfig config_;
  Clock clock_;
  EventHub* events_;
  mutable std::mutex mutex_;
  std::uint64_t counter_ = 0;
  std::map<std::string, Entity> entities_;
  std::map<std::string, Assignment> assignments_;
  std::map<std::pair<StateKind, std::string>, std::deque<nlohmann::json>> state_;
  std::map<std::string, std::deque<SeriesPoint>> series_;
  std::map<std::string, StreamInfo> streams_;
};

nlohmann::json to_json(const Entity& e);
nlohmann::json to_json(const EntityView& v);
nlohmann::json to_json(const Assignment& a);
nlohmann::json to_json(const StreamInfo& s);

}  // namespace le3d

#include "le3d/coordination/client.hpp"

#include <chrono>

#include "httplib.h"
#include "json.hpp"
#include "le3d/error.hpp"

namespace le3d {

using nlohmann::json;

namespace {

json checked(const httplib::Result& r, const std::string& what) {
  if (!r) throw Error(what + ": " + httplib::to_string(r.error()));
  json body = json::parse(r->body, nullptr, false);
  if (r->status >= 200 && r->status < 300) {
    if (body.is_discarded()) throw Error(what + ": response is not JSON");
    return body;
  }
  std::string message = what + ": HTTP " + std::to_string(r->status);
  if (body.is_object() && body.contains("error") && body["error"].is_string()) {
    message += " " + body["error"].get<std::string>();
  }
  switch (r->status) {
    case 400: throw InputError(message);
    case 404: throw NotFoundError(message);
    case 409: throw ConflictError(message);
    default: throw Error(message);
  }
}

}  // namespace

CoordinatorClient::CoordinatorClient(const std::string& url, std::int64_t heartbeat_interval_ms)
    : interval_ms_(heartbeat_interval_ms) {
  if (url.rfind("http://", 0) != 0) throw ConfigError("coordinator url must start with http://, got '" + url + "'");
  if (heartbeat_interval_ms <= 0) throw ConfigError("heartbeat interval must be positive");
  http_ = std::make_unique<httplib::Client>(url);
  if (!http_->is_valid()) throw ConfigError("invalid coordinator url '" + url + "'");
  http_->set_connection_timeout(2, 0);
  http_->set_read_timeout(5, 0);
}

CoordinatorClient::~CoordinatorClient() { stop(); }

std::string CoordinatorClient::register_entity(EntityKind kind, const std::string& site,
                                               const std::optional<std::string>& sensor_type) {
  json body{{"kind", std::string(to_string(kind))}, {"site", site}};
  if (sensor_type) body["sensor_type"] = *sensor_type;
  std::lock_guard lock(mutex_);
  const json e = checked(http_->Post("/api/v1/entities", body.dump(), "application/json"), "register");
  auto id = e.at("entity_id").get<std::string>();
  entities_.push_back(id);
  return id;
}

Assignment CoordinatorClient::assign(const std::string& source_entity_id, const std::string& stream_id) {
  const json body{{"source_entity_id", source_entity_id}, {"stream_id", stream_id}};
  std::lock_guard lock(mutex_);
  const json a = checked(http_->Post("/api/v1/assignments", body.dump(), "application/json"), "assign");
  Assignment out;
  out.source_entity_id = a.at("source_entity_id").get<std::string>();
  out.detector_entity_id = a.at("detector_entity_id").get<std::string>();
  out.stream_id = a.at("stream_id").get<std::string>();
  out.site = a.at("site").get<std::string>();
  out.created_at = a.at("created_at").get<TimestampMs>();
  return out;
}

void CoordinatorClient::heartbeat(const std::string& entity_id) {
  std::lock_guard lock(mutex_);
  checked(http_->Put("/api/v1/entities/" + entity_id + "/heartbeat", "", "application/json"), "heartbeat");
}

void CoordinatorClient::start_heartbeats() {
  std::lock_guard lock(mutex_);
  if (thread_.joinable()) return;
  stopping_ = false;
  thread_ = std::thread([this] {
    std::unique_lock lock(mutex_);
    while (!cv_.wait_for(lock, std::chrono::milliseconds(interval_ms_), [this] { return stopping_; })) {
      for (const auto& id : entities_) {
        auto r = http_->Put("/api/v1/entities/" + id + "/heartbeat", "", "application/json");
        if (!r || r->status != 200) ++failures_;
      }
    }
  });
}

void CoordinatorClient::stop() {
  {
    std::lock_guard lock(mutex_);
    stopping_ = true;
  }
  cv_.notify_all();
  if (thread_.joinable()) thread_.join();
}

std::vector<std::string> CoordinatorClient::registered() const {
  std::lock_guard lock(mutex_);
  return entities_;
}

}  // namespace le3d

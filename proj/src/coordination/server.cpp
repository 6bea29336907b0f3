#include "le3d/coordination/server.hpp"

#include <chrono>

#include "httplib.h"
#include "le3d/datagen/service.hpp"
#include "le3d/error.hpp"
#include "le3d/transport/json_codec.hpp"
#include "le3d/transport/topic.hpp"

namespace le3d {

using nlohmann::json;

CoordinatorBridge::CoordinatorBridge(Bus& bus, Registry& registry) : bus_(bus), registry_(registry) {}

CoordinatorBridge::~CoordinatorBridge() { stop(); }

void CoordinatorBridge::start() {
  if (!subscriptions_.empty()) return;
  auto handler = [this](const Message& m) { handle(m); };
  for (const char* filter : {"le3d/decision/#", "le3d/class/#", "le3d/relay/#", "le3d/controlack/#"}) {
    subscriptions_.push_back(bus_.subscribe(filter, handler));
  }
}

void CoordinatorBridge::stop() {
  for (auto id : subscriptions_) bus_.unsubscribe(id);
  subscriptions_.clear();
}

void CoordinatorBridge::handle(const Message& message) {
  try {
    const Topic topic = parse_topic(message.topic);
    const Envelope envelope = decode(message.payload);
    switch (topic.channel) {
      case Channel::Decision:
        registry_.record_decision(std::get<DriftDecision>(envelope.body));
        break;
      case Channel::Class:
        registry_.record_class(std::get<ClassReport>(envelope.body));
        break;
      case Channel::Relay:
        registry_.record_sample(std::get<Sample>(envelope.body));
        break;
      case Channel::ControlAck: {
        const auto& ack = std::get<CommandAck>(envelope.body);
        registry_.record_ack(ack);
        {
          std::lock_guard lock(mutex_);
          acks_.push_back(ack);
        }
        cv_.notify_all();
        break;
      }
      default:
        break;
    }
  } catch (const std::bad_variant_access&) {
    std::lock_guard lock(mutex_);
    ++decode_errors_;
  } catch (const Error&) {
    std::lock_guard lock(mutex_);
    ++decode_errors_;
  }
}

std::vector<CommandAck> CoordinatorBridge::send_command(const DriftCommand& cmd, std::int64_t wait_ms) {
  std::size_t seen;
  {
    std::lock_guard lock(mutex_);
    seen = acks_.size();
  }
  std::string site = std::string(kBroadcastSite);
  if (cmd.scope == DriftScope::Single) {
    if (auto s = registry_.site_of_stream(cmd.target)) site = *s;
  }
  if (!publish_envelope(bus_, command_topic(cmd, site), make_envelope(cmd))) {
    throw Error("transport is not connected");
  }

  const auto matches = [&](const CommandAck& a) { return a.target == cmd.target && a.kind == cmd.kind; };
  const auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(wait_ms);
  const auto quiet = std::chrono::milliseconds(250);
  std::vector<CommandAck> out;
  std::unique_lock lock(mutex_);
  while (true) {
    for (; seen < acks_.size(); ++seen) {
      if (matches(acks_[seen])) out.push_back(acks_[seen]);
    }
    if (!out.empty() && cmd.scope == DriftScope::Single) break;
    auto until = deadline;
    if (!out.empty()) until = std::min(deadline, std::chrono::steady_clock::now() + quiet);
    if (std::chrono::steady_clock::now() >= until) break;
    if (!cv_.wait_until(lock, until, [&] { return acks_.size() > seen; })) {
      if (!out.empty() || std::chrono::steady_clock::now() >= deadline) break;
    }
  }
  if (acks_.size() > 10000) {
    acks_.erase(acks_.begin(), acks_.begin() + static_cast<std::ptrdiff_t>(acks_.size() - 1000));
  }
  return out;
}

std::uint64_t CoordinatorBridge::decode_errors() const {
  std::lock_guard lock(mutex_);
  return decode_errors_;
}

CoordinatorOptions CoordinatorOptions::from_config(const Config& config) {
  CoordinatorOptions o;
  o.host = config.get_string("coordination.host");
  o.port = static_cast<int>(config.get_int("coordination.port"));
  o.control_wait_ms = config.get_int("coordination.control_wait_ms");
  o.static_dir = config.get_string("coordination.static_dir");
  o.registry.liveness_window_ms = config.get_int("coordination.liveness_window_ms");
  o.registry.history = static_cast<std::size_t>(config.get_int("coordination.history"));
  o.registry.series = static_cast<std::size_t>(config.get_int("coordination.series"));
  return o;
}

namespace {

void reply(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void reply_error(httplib::Response& res, int status, const std::string& message,
                 const std::optional<std::string>& field = std::nullopt) {
  json body{{"error", message}};
  if (field) body["field"] = *field;
  reply(res, status, body);
}

json parse_body(const httplib::Request& req) {
  json j = json::parse(req.body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw DecodeError("body", "request body must be a JSON object");
  return j;
}

std::string required_string(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_string()) throw DecodeError(key, std::string("'") + key + "' must be a string");
  return it->get<std::string>();
}

std::optional<std::string> query(const httplib::Request& req, const char* key) {
  if (!req.has_param(key)) return std::nullopt;
  return req.get_param_value(key);
}

template <class F>
httplib::Server::Handler guarded(F fn) {
  return [fn](const httplib::Request& req, httplib::Response& res) {
    try {
      fn(req, res);
    } catch (const DecodeError& e) {
      reply_error(res, 400, e.what(), e.field());
    } catch (const InputError& e) {
      reply_error(res, 400, e.what());
    } catch (const NotFoundError& e) {
      reply_error(res, 404, e.what());
    } catch (const ConflictError& e) {
      reply_error(res, 409, e.what());
    } catch (const Error& e) {
      reply_error(res, 503, e.what());
    } catch (const std::exception& e) {
      reply_error(res, 500, e.what());
    }
  };
}

}  // namespace

CoordinatorServer::CoordinatorServer(Registry& registry, EventHub& events, CoordinatorOptions options,
                                     CoordinatorBridge* bridge)
    : registry_(registry),
      events_(events),
      options_(std::move(options)),
      bridge_(bridge),
      server_(std::make_unique<httplib::Server>()) {
  routes();
}

CoordinatorServer::~CoordinatorServer() { stop(); }

void CoordinatorServer::routes() {
  auto& s = *server_;

  s.Get("/api/v1/healthz", guarded([](const httplib::Request&, httplib::Response& res) {
          reply(res, 200, json{{"status", "ok"}});
        }));

  s.Post("/api/v1/entities", guarded([this](const httplib::Request& req, httplib::Response& res) {
           const json body = parse_body(req);
           const auto kind = parse_entity_kind(required_string(body, "kind"));
           const auto site = required_string(body, "site");
           std::optional<std::string> sensor_type;
           if (auto it = body.find("sensor_type"); it != body.end() && !it->is_null()) {
             if (!it->is_string()) throw DecodeError("sensor_type", "'sensor_type' must be a string");
             sensor_type = it->get<std::string>();
           }
           reply(res, 201, to_json(EntityView{registry_.register_entity(kind, site, sensor_type), true}));
         }));

  s.Get("/api/v1/entities", guarded([this](const httplib::Request& req, httplib::Response& res) {
          std::optional<EntityKind> kind;
          if (auto k = query(req, "kind")) kind = parse_entity_kind(*k);
          json out = json::array();
          for (const auto& v : registry_.list_entities(kind, query(req, "site"))) out.push_back(to_json(v));
          reply(res, 200, out);
        }));

  s.Get(R"(/api/v1/entities/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
          auto v = registry_.entity(req.matches[1]);
          if (!v) throw NotFoundError("unknown entity '" + std::string(req.matches[1]) + "'");
          reply(res, 200, to_json(*v));
        }));

  s.Put(R"(/api/v1/entities/([^/]+)/heartbeat)",
        guarded([this](const httplib::Request& req, httplib::Response& res) {
          registry_.heartbeat(req.matches[1]);
          reply(res, 200, to_json(*registry_.entity(req.matches[1])));
        }));

  s.Post("/api/v1/assignments", guarded([this](const httplib::Request& req, httplib::Response& res) {
           const json body = parse_body(req);
           const auto a = registry_.assign(required_string(body, "source_entity_id"),
                                           required_string(body, "stream_id"));
           reply(res, 200, to_json(a));
         }));

  s.Get("/api/v1/assignments", guarded([this](const httplib::Request& req, httplib::Response& res) {
          json out = json::array();
          for (const auto& a : registry_.list_assignments(query(req, "site"))) out.push_back(to_json(a));
          reply(res, 200, out);
        }));

  s.Post(R"(/api/v1/state/(decision|classification))",
         guarded([this](const httplib::Request& req, httplib::Response& res) {
           const auto kind = parse_state_kind(req.matches[1].str());
           json body = parse_body(req);
           if (body.contains("schema_version") && body.contains("body")) body = body["body"];
           registry_.record_state(kind, body);
           reply(res, 202, json{{"status", "stored"}});
         }));

  s.Get(R"(/api/v1/state/(decision|classification)/([^/]+)/latest)",
        guarded([this](const httplib::Request& req, httplib::Response& res) {
          auto latest = registry_.latest(parse_state_kind(req.matches[1].str()), req.matches[2]);
          reply(res, 200, latest ? *latest : json(nullptr));
        }));

  s.Get(R"(/api/v1/state/(decision|classification)/([^/]+)/history)",
        guarded([this](const httplib::Request& req, httplib::Response& res) {
          json out = json::array();
          for (auto& j : registry_.history(parse_state_kind(req.matches[1].str()), req.matches[2])) {
            out.push_back(std::move(j));
          }
          reply(res, 200, out);
        }));

  s.Get("/api/v1/streams", guarded([this](const httplib::Request&, httplib::Response& res) {
          json out = json::array();
          for (const auto& info : registry_.streams()) out.push_back(to_json(info));
          reply(res, 200, out);
        }));

  s.Get(R"(/api/v1/streams/([^/]+)/series)",
        guarded([this](const httplib::Request& req, httplib::Response& res) {
          json out = json::array();
          for (const auto& p : registry_.series(req.matches[1])) {
            out.push_back(json{{"timestamp", p.timestamp}, {"value", p.value}});
          }
          reply(res, 200, out);
        }));

  s.Post("/api/v1/control", guarded([this](const httplib::Request& req, httplib::Response& res) {
           if (!bridge_) throw Error("control proxy has no transport");
           json body = parse_body(req);
           if (!body.contains("issued_at")) body["issued_at"] = registry_.now();
           if (!body.contains("duration_ms")) body["duration_ms"] = 0;
           if (!body.contains("scope")) body["scope"] = "single";
           const DriftCommand cmd = wire::command_from_json(body, "body");
           const auto acks = bridge_->send_command(cmd, options_.control_wait_ms);
           json out{{"command", wire::to_json(cmd)}, {"acks", json::array()}};
           bool rejected = false;
           for (const auto& a : acks) {
             out["acks"].push_back(wire::to_json(a));
             rejected = rejected || !a.accepted;
           }
           out["status"] = acks.empty() ? "pending" : (rejected ? "rejected" : "acknowledged");
           reply(res, acks.empty() ? 202 : 200, out);
         }));

  s.Get("/api/v1/events", [this](const httplib::Request& req, httplib::Response& res) {
    std::uint64_t cursor = events_.last_id();
    if (req.has_header("Last-Event-ID")) {
      try {
        cursor = std::stoull(req.get_header_value("Last-Event-ID"));
      } catch (const std::exception&) {
      }
    }
    auto position = std::make_shared<std::uint64_t>(cursor);
    res.set_header("Cache-Control", "no-cache");
    res.set_chunked_content_provider("text/event-stream", [this, position](std::size_t, httplib::DataSink& sink) {
      if (events_.closed()) return false;
      const auto batch = events_.wait_after(*position, 1000);
      if (events_.closed()) return false;
      std::string chunk;
      if (batch.empty()) {
        chunk = ": keepalive\n\n";
      } else {
        for (const auto& e : batch) {
          chunk += "id: " + std::to_string(e.id) + "\nevent: " + e.name + "\ndata: " + e.data.dump() + "\n\n";
          *position = e.id;
        }
      }
      return sink.write(chunk.data(), chunk.size());
    });
  });

  if (!options_.static_dir.empty() && !s.set_mount_point("/", options_.static_dir)) {
    throw ConfigError("static directory '" + options_.static_dir + "' does not exist");
  }
}

int CoordinatorServer::start() {
  if (options_.port == 0) {
    port_ = server_->bind_to_any_port(options_.host);
  } else if (server_->bind_to_port(options_.host, options_.port)) {
    port_ = options_.port;
  } else {
    port_ = -1;
  }
  if (port_ <= 0) throw Error("cannot bind coordination server to " + options_.host + ":" + std::to_string(options_.port));
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  return port_;
}

void CoordinatorServer::run() {
  if (!server_->listen(options_.host, options_.port)) {
    throw Error("cannot bind coordination server to " + options_.host + ":" + std::to_string(options_.port));
  }
}

void CoordinatorServer::stop() {
  events_.close();
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace le3d

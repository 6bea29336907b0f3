#include <random>
#include <set>
#include <thread>

#include "doctest.h"
#include "httplib.h"
#include "json.hpp"
#include "le3d/clock.hpp"
#include "le3d/coordination/client.hpp"
#include "le3d/coordination/registry.hpp"
#include "le3d/coordination/server.hpp"
#include "le3d/datagen/service.hpp"
#include "le3d/error.hpp"
#include "le3d/transport/codec.hpp"
#include "le3d/transport/json_codec.hpp"
#include "le3d/transport/loopback.hpp"

using namespace le3d;
using json = nlohmann::json;

namespace {

DriftDecision decision(const std::string& stream, std::uint64_t seq, bool drifting = true) {
  DriftDecision d;
  d.stream_id = stream;
  d.detector_id = "det1";
  d.site = "lab";
  d.decided_at = static_cast<TimestampMs>(seq);
  d.drifting = drifting;
  d.votes[EstimatorKind::Adwin] = drifting;
  d.ks = {0.4, 0.02, 10, 300};
  d.metadata.sensor_type = "temperature";
  d.seq_at_decision = seq;
  return d;
}

/// Independent model of the matching rule used to check the registry.
struct MatchingModel {
  struct Detector {
    std::string site;
    TimestampMs heartbeat;
  };
  std::map<std::string, Detector> detectors;
  std::map<std::string, std::string> sources;  // id -> site
  std::map<std::string, std::string> assigned;  // stream -> detector
  std::int64_t window;

  std::optional<std::string> choose(const std::string& site, TimestampMs now) const {
    std::optional<std::string> best;
    std::size_t best_load = 0;
    for (const auto& [id, d] : detectors) {
      if (d.site != site || now - d.heartbeat > window) continue;
      std::size_t load = 0;
      for (const auto& [s, det] : assigned) load += det == id;
      if (!best || load < best_load || (load == best_load && id < *best)) {
        best = id;
        best_load = load;
      }
    }
    return best;
  }
};

struct Server {
  explicit Server(CoordinatorBridge* bridge = nullptr, std::int64_t control_wait_ms = 1000)
      : registry({}, wall_clock_ms, &events),
        server(registry, events, options(control_wait_ms), bridge),
        port(server.start()),
        client("127.0.0.1", port) {
    client.set_read_timeout(5, 0);
  }
  static CoordinatorOptions options(std::int64_t wait) {
    CoordinatorOptions o;
    o.host = "127.0.0.1";
    o.port = 0;
    o.control_wait_ms = wait;
    return o;
  }
  json post(const std::string& path, const json& body, int expect) {
    auto r = client.Post(path, body.dump(), "application/json");
    REQUIRE(r);
    CHECK(r->status == expect);
    return json::parse(r->body);
  }
  json get(const std::string& path, int expect = 200) {
    auto r = client.Get(path);
    REQUIRE(r);
    CHECK(r->status == expect);
    return json::parse(r->body);
  }

  EventHub events;
  Registry registry;
  CoordinatorServer server;
  int port;
  httplib::Client client;
};

}  // namespace

TEST_SUITE("registry") {
  TEST_CASE("register and fetch") {
    VirtualClock clock(1000);
    Registry r({}, clock.as_clock());
    auto e = r.register_entity(EntityKind::Emulator, "lab", "temperature");
    auto f = r.register_entity(EntityKind::Detector, "lab");
    CHECK(e.entity_id != f.entity_id);
    auto got = r.entity(e.entity_id);
    REQUIRE(got);
    CHECK(got->entity.kind == EntityKind::Emulator);
    CHECK(got->entity.sensor_type == std::optional<std::string>("temperature"));
    CHECK(got->live);
    CHECK(r.list_entities().size() == 2);
    CHECK(r.list_entities(EntityKind::Detector).size() == 1);
    CHECK_THROWS_AS(parse_entity_kind("toaster"), InputError);
    CHECK_THROWS_AS(r.register_entity(EntityKind::Detector, "bad site"), InputError);
  }

  TEST_CASE("heartbeat and stale marker") {
    VirtualClock clock(0);
    Registry r({}, clock.as_clock());
    auto d = r.register_entity(EntityKind::Detector, "lab");
    clock.set(60'000);
    CHECK(r.entity(d.entity_id)->live);
    clock.set(60'001);
    CHECK_FALSE(r.entity(d.entity_id)->live);
    CHECK(r.list_entities().size() == 1);
    auto hb = r.heartbeat(d.entity_id);
    CHECK(hb.heartbeat_at == 60'001);
    CHECK(hb.heartbeat_at >= hb.announced_at);
    CHECK(r.entity(d.entity_id)->live);
    CHECK_THROWS_AS(r.heartbeat("nobody"), NotFoundError);
  }

  TEST_CASE("assignment examples") {
    VirtualClock clock(0);
    Registry r({}, clock.as_clock());
    auto src = r.register_entity(EntityKind::Emulator, "lab", "temperature");
    CHECK_THROWS_AS(r.assign(src.entity_id, "s0"), ConflictError);
    CHECK_THROWS_AS(r.assign("missing", "s0"), NotFoundError);
    auto d1 = r.register_entity(EntityKind::Detector, "lab");
    auto only = r.assign(src.entity_id, "s1");
    CHECK(only.detector_entity_id == d1.entity_id);
    r.assign(src.entity_id, "s2");
    auto d2 = r.register_entity(EntityKind::Detector, "lab");
    CHECK(r.assign(src.entity_id, "s3").detector_entity_id == d2.entity_id);
    clock.advance(5);
    CHECK(r.assign(src.entity_id, "s1") == only);
    CHECK(r.list_assignments().size() == 3);
    CHECK_THROWS_AS(r.assign(d1.entity_id, "s9"), InputError);
    auto other = r.register_entity(EntityKind::Streamer, "elsewhere");
    CHECK_THROWS_AS(r.assign(other.entity_id, "s4"), ConflictError);
  }

  TEST_CASE("listing filter and order") {
    VirtualClock clock(0);
    Registry r({}, clock.as_clock());
    CHECK(r.list_assignments().empty());
    r.register_entity(EntityKind::Detector, "lab");
    r.register_entity(EntityKind::Detector, "yard");
    auto a = r.register_entity(EntityKind::Emulator, "lab");
    auto b = r.register_entity(EntityKind::Emulator, "yard");
    r.assign(a.entity_id, "zeta");
    r.assign(a.entity_id, "alpha");
    clock.advance(1);
    r.assign(b.entity_id, "beta");
    auto all = r.list_assignments();
    REQUIRE(all.size() == 3);
    CHECK(all[0].stream_id == "alpha");
    CHECK(all[1].stream_id == "zeta");
    CHECK(all[2].stream_id == "beta");
    CHECK(r.list_assignments(std::string("lab")).size() == 2);
  }

  TEST_CASE("randomized interleavings agree with the matching model") {
    std::mt19937_64 rng(17);
    VirtualClock clock(0);
    RegistryConfig cfg;
    cfg.liveness_window_ms = 5000;
    Registry r(cfg, clock.as_clock());
    MatchingModel model{{}, {}, {}, cfg.liveness_window_ms};
    const std::vector<std::string> sites{"a", "b", "c"};
    for (int op = 0; op < 3000; ++op) {
      switch (rng() % 6) {
        case 0: {
          const auto& site = sites[rng() % sites.size()];
          auto e = r.register_entity(EntityKind::Detector, site);
          model.detectors[e.entity_id] = {site, clock.now()};
          break;
        }
        case 1: {
          const auto& site = sites[rng() % sites.size()];
          auto e = r.register_entity(EntityKind::Emulator, site, "temperature");
          model.sources[e.entity_id] = site;
          break;
        }
        case 2: {
          if (model.detectors.empty()) break;
          auto it = std::next(model.detectors.begin(), static_cast<long>(rng() % model.detectors.size()));
          r.heartbeat(it->first);
          it->second.heartbeat = clock.now();
          break;
        }
        case 3:
          clock.advance(static_cast<std::int64_t>(rng() % 3000));
          break;
        default: {
          if (model.sources.empty()) break;
          auto src = std::next(model.sources.begin(), static_cast<long>(rng() % model.sources.size()));
          const std::string stream = "s" + std::to_string(rng() % 400);
          if (auto it = model.assigned.find(stream); it != model.assigned.end()) {
            CHECK(r.assign(src->first, stream).detector_entity_id == it->second);
            break;
          }
          auto expected = model.choose(src->second, clock.now());
          if (!expected) {
            CHECK_THROWS_AS(r.assign(src->first, stream), ConflictError);
          } else {
            CHECK(r.assign(src->first, stream).detector_entity_id == *expected);
            model.assigned[stream] = *expected;
          }
        }
      }
    }
    std::set<std::string> streams;
    for (const auto& a : r.list_assignments()) CHECK(streams.insert(a.stream_id).second);
    CHECK(streams.size() == model.assigned.size());
  }

  TEST_CASE("concurrent assigns keep the stream to detector function") {
    Registry r;
    std::vector<std::string> sources;
    for (int i = 0; i < 4; ++i) r.register_entity(EntityKind::Detector, "lab");
    for (int i = 0; i < 4; ++i) sources.push_back(r.register_entity(EntityKind::Emulator, "lab").entity_id);
    std::vector<std::thread> threads;
    std::vector<std::map<std::string, std::string>> seen(4);
    for (int t = 0; t < 4; ++t) {
      threads.emplace_back([&, t] {
        for (int i = 0; i < 200; ++i) {
          const std::string stream = "s" + std::to_string((i * 7 + t) % 150);
          seen[t][stream] = r.assign(sources[t], stream).detector_entity_id;
        }
      });
    }
    for (auto& th : threads) th.join();
    std::map<std::string, std::string> truth;
    for (const auto& a : r.list_assignments()) truth[a.stream_id] = a.detector_entity_id;
    for (const auto& m : seen) {
      for (const auto& [s, d] : m) CHECK(truth.at(s) == d);
    }
    auto loads = r.detector_loads("lab");
    std::size_t lo = SIZE_MAX, hi = 0;
    for (const auto& [d, n] : loads) {
      lo = std::min(lo, n);
      hi = std::max(hi, n);
    }
    CHECK(hi - lo <= 1);
  }

  TEST_CASE("state store latest, history cap and absence") {
    Registry r;
    CHECK_FALSE(r.latest(StateKind::Decision, "s1"));
    CHECK(r.history(StateKind::Decision, "s1").empty());
    for (std::uint64_t i = 1; i <= 1001; ++i) r.record_decision(decision("s1", i, i % 2));
    auto h = r.history(StateKind::Decision, "s1");
    REQUIRE(h.size() == 1000);
    CHECK(h.front()["seq_at_decision"] == 2);
    CHECK(h.back()["seq_at_decision"] == 1001);
    CHECK(*r.latest(StateKind::Decision, "s1") == wire::to_json(decision("s1", 1001, true)));
    json bad = wire::to_json(decision("s1", 1));
    bad.erase("stream_id");
    try {
      r.record_state(StateKind::Decision, bad);
      FAIL("expected decode error");
    } catch (const DecodeError& e) {
      CHECK(e.field() == "body.stream_id");
    }
  }
}

TEST_SUITE("event-hub") {
  TEST_CASE("bounded ordered log with waits") {
    EventHub hub(3);
    for (int i = 0; i < 5; ++i) hub.publish("e", json{{"i", i}});
    auto got = hub.wait_after(0, 0);
    REQUIRE(got.size() == 3);
    CHECK(got.front().id == 3);
    CHECK(hub.last_id() == 5);
    CHECK(hub.wait_after(5, 10).empty());
    std::thread later([&] {
      std::this_thread::sleep_for(std::chrono::milliseconds(20));
      hub.publish("late", json::object());
    });
    auto woke = hub.wait_after(5, 2000);
    later.join();
    REQUIRE(woke.size() == 1);
    CHECK(woke[0].name == "late");
    hub.close();
    CHECK(hub.closed());
    CHECK(hub.wait_after(6, 5000).empty());
  }
}

TEST_SUITE("coordination-http") {
  TEST_CASE("health, entities and heartbeat") {
    Server s;
    CHECK(s.get("/api/v1/healthz")["status"] == "ok");
    auto e = s.post("/api/v1/entities", {{"kind", "emulator"}, {"site", "lab"}, {"sensor_type", "temperature"}}, 201);
    CHECK(e["kind"] == "emulator");
    CHECK(e["live"] == true);
    auto id = e["entity_id"].get<std::string>();
    CHECK(s.get("/api/v1/entities/" + id)["entity_id"] == id);
    CHECK(s.get("/api/v1/entities?kind=emulator").size() == 1);
    CHECK(s.get("/api/v1/entities?kind=detector").empty());
    s.get("/api/v1/entities/nobody", 404);
    auto r = s.client.Put("/api/v1/entities/" + id + "/heartbeat", "", "application/json");
    REQUIRE(r);
    CHECK(r->status == 200);
    auto bad = s.post("/api/v1/entities", {{"kind", "toaster"}, {"site", "lab"}}, 400);
    CHECK(bad.contains("error"));
    auto missing = s.post("/api/v1/entities", {{"kind", "detector"}}, 400);
    CHECK(missing["field"] == "site");
    auto raw = s.client.Post("/api/v1/entities", "{oops", "application/json");
    REQUIRE(raw);
    CHECK(raw->status == 400);
  }

  TEST_CASE("assignments over http") {
    Server s;
    auto src = s.post("/api/v1/entities", {{"kind", "emulator"}, {"site", "lab"}}, 201)["entity_id"];
    auto none = s.post("/api/v1/assignments", {{"source_entity_id", src}, {"stream_id", "s1"}}, 409);
    CHECK(none["error"] == "no detector available");
    s.post("/api/v1/assignments", {{"source_entity_id", "ghost"}, {"stream_id", "s1"}}, 404);
    auto det = s.post("/api/v1/entities", {{"kind", "detector"}, {"site", "lab"}}, 201)["entity_id"];
    auto a = s.post("/api/v1/assignments", {{"source_entity_id", src}, {"stream_id", "s1"}}, 200);
    CHECK(a["detector_entity_id"] == det);
    CHECK(s.post("/api/v1/assignments", {{"source_entity_id", src}, {"stream_id", "s1"}}, 200) == a);
    CHECK(s.get("/api/v1/assignments").size() == 1);
    CHECK(s.get("/api/v1/assignments?site=lab").size() == 1);
    CHECK(s.get("/api/v1/assignments?site=yard").empty());
  }

  TEST_CASE("state endpoints") {
    Server s;
    CHECK(s.get("/api/v1/state/decision/s1/latest").is_null());
    CHECK(s.get("/api/v1/state/classification/s1/history").empty());
    const auto d = decision("s1", 7);
    s.post("/api/v1/state/decision", wire::to_json(d), 202);
    CHECK(s.get("/api/v1/state/decision/s1/latest") == wire::to_json(d));
    s.post("/api/v1/state/decision", json::parse(encode(make_envelope(decision("s1", 8)))), 202);
    CHECK(s.get("/api/v1/state/decision/s1/history").size() == 2);
    json bad = wire::to_json(d);
    bad["ks"]["p_value"] = 2.0;
    CHECK(s.post("/api/v1/state/decision", bad, 400)["field"] == "body.ks.p_value");
    auto streams = s.get("/api/v1/streams");
    REQUIRE(streams.size() == 1);
    CHECK(streams[0]["stream_id"] == "s1");
    CHECK(s.get("/api/v1/streams/s1/series").empty());
  }

  TEST_CASE("control without a transport is unavailable") {
    Server s;
    s.post("/api/v1/control", {{"target", "t1"}, {"kind", "step"}, {"magnitude", 1.0}}, 503);
  }

  TEST_CASE("control proxy reaches emulators and reports acks") {
    LoopbackBus bus;
    EmulatorService t1(bus, Emulator({20, 0, 100, NoiseModel::Gaussian, 1, "temperature", "C"}, "t1", "lab"));
    EmulatorService t2(bus, Emulator({20, 0, 100, NoiseModel::Gaussian, 2, "temperature", "C"}, "t2", "yard"));
    t1.start();
    t2.start();
    t1.tick(0);
    t2.tick(0);
    EventHub events;
    Registry registry({}, wall_clock_ms, &events);
    CoordinatorBridge bridge(bus, registry);
    bridge.start();
    CoordinatorServer server(registry, events, Server::options(500), &bridge);
    httplib::Client client("127.0.0.1", server.start());
    auto post = [&](const json& body) {
      auto r = client.Post("/api/v1/control", body.dump(), "application/json");
      REQUIRE(r);
      return std::make_pair(r->status, json::parse(r->body));
    };

    auto [st1, single] = post({{"target", "t1"}, {"kind", "step"}, {"magnitude", 2.0}, {"issued_at", 0}});
    CHECK(st1 == 200);
    CHECK(single["status"] == "acknowledged");
    REQUIRE(single["acks"].size() == 1);
    CHECK(single["acks"][0]["stream_id"] == "t1");
    CHECK(t1.tick(100).value == 22.0);
    CHECK(t2.tick(100).value == 20.0);

    auto [st2, all] = post({{"target", "temperature"}, {"kind", "step"}, {"magnitude", 1.0}, {"scope", "all_of_type"}});
    CHECK(st2 == 200);
    CHECK(all["acks"].size() == 2);

    auto [st3, nack] = post({{"target", "t2"}, {"kind", "noise_scale"}, {"magnitude", 0.0}});
    CHECK(st3 == 200);
    CHECK(nack["status"] == "rejected");
    CHECK(nack["acks"][0]["reason"] == "magnitude must be > 0");

    auto [st4, nobody] = post({{"target", "ghost"}, {"kind", "step"}, {"magnitude", 1.0}});
    CHECK(st4 == 202);
    CHECK(nobody["status"] == "pending");

    auto [st5, invalid] = post({{"target", "t1"}, {"kind", "wobble"}, {"magnitude", 1.0}});
    CHECK(st5 == 400);
    CHECK(invalid["field"] == "body.kind");
    server.stop();
  }

  TEST_CASE("bridge mirrors bus traffic into the registry") {
    LoopbackBus bus;
    Registry registry;
    CoordinatorBridge bridge(bus, registry);
    bridge.start();
    publish_envelope(bus, "le3d/decision/lab/det1/s1", make_envelope(decision("s1", 3)));
    Sample sample;
    sample.stream_id = "s1";
    sample.site = "lab";
    sample.timestamp = 5;
    sample.value = 1.25;
    sample.metadata.sensor_type = "temperature";
    publish_envelope(bus, "le3d/relay/lab/s1", make_envelope(sample));
    bus.publish({"le3d/decision/lab/det1/s2", "garbage", true}, Qos::AtLeastOnce);
    CHECK(registry.latest(StateKind::Decision, "s1").has_value());
    REQUIRE(registry.series("s1").size() == 1);
    CHECK(registry.series("s1")[0].value == 1.25);
    CHECK(bridge.decode_errors() == 1);
  }

  TEST_CASE("server-push stream delivers registry events with ids") {
    Server s;
    std::string received;
    std::thread reader([&] {
      httplib::Client c("127.0.0.1", s.port);
      c.set_read_timeout(5, 0);
      c.Get("/api/v1/events", [&](const char* data, std::size_t n) {
        received.append(data, n);
        return received.find("event: decision") == std::string::npos;
      });
    });
    std::this_thread::sleep_for(std::chrono::milliseconds(200));
    s.registry.record_decision(decision("s1", 1));
    reader.join();
    CHECK(received.find("id: ") != std::string::npos);
    CHECK(received.find("event: decision") != std::string::npos);
    CHECK(received.find("\"stream_id\":\"s1\"") != std::string::npos);

    std::string replay;
    httplib::Client c("127.0.0.1", s.port);
    c.set_read_timeout(5, 0);
    httplib::Headers h{{"Last-Event-ID", "0"}};
    c.Get("/api/v1/events", h, [&](const char* data, std::size_t n) {
      replay.append(data, n);
      return replay.find("event: decision") == std::string::npos;
    });
    CHECK(replay.find("event: decision") != std::string::npos);
    s.server.stop();
  }

  TEST_CASE("client registers, assigns and keeps entities live") {
    Server s;
    CoordinatorClient c("http://127.0.0.1:" + std::to_string(s.port), 20);
    CHECK_THROWS_AS(c.assign("ghost", "s1"), NotFoundError);
    const auto emu = c.register_entity(EntityKind::Emulator, "lab", "temperature");
    CHECK_THROWS_AS(c.assign(emu, "s1"), ConflictError);
    const auto det = c.register_entity(EntityKind::Detector, "lab");
    CHECK_THROWS_AS(c.assign(emu, "bad/id"), InputError);
    const Assignment a = c.assign(emu, "s1");
    CHECK(a.detector_entity_id == det);
    CHECK(a.site == "lab");
    CHECK(c.assign(emu, "s1") == a);
    CHECK(c.registered() == std::vector<std::string>{emu, det});

    const auto before = s.registry.entity(det)->entity.heartbeat_at;
    c.start_heartbeats();
    bool advanced = false;
    for (int i = 0; i < 100 && !advanced; ++i) {
      std::this_thread::sleep_for(std::chrono::milliseconds(10));
      advanced = s.registry.entity(det)->entity.heartbeat_at > before;
    }
    c.stop();
    CHECK(advanced);
    CHECK(c.heartbeat_failures() == 0);
    CHECK_THROWS_AS(c.heartbeat("nobody"), NotFoundError);
  }

  TEST_CASE("client reports configuration and connection errors") {
    CHECK_THROWS_AS(CoordinatorClient("ftp://host", 1000), ConfigError);
    CHECK_THROWS_AS(CoordinatorClient("http://127.0.0.1:1", 0), ConfigError);
    CoordinatorClient c("http://127.0.0.1:1", 1000);
    CHECK_THROWS_AS(c.register_entity(EntityKind::Detector, "lab"), Error);
  }
}

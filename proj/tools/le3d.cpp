#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <iostream>
#include <optional>
#include <thread>

#include "CLI11.hpp"
#include "le3d/aggregator/service.hpp"
#include "le3d/coordination/client.hpp"
#include "le3d/coordination/server.hpp"
#include "le3d/datagen/service.hpp"
#include "le3d/datagen/streamer.hpp"
#include "le3d/detector/service.hpp"
#include "le3d/error.hpp"
#include "le3d/scenario.hpp"
#include "le3d/transport/json_codec.hpp"
#include "le3d/transport/mqtt.hpp"

namespace {

using namespace le3d;

std::atomic<bool> g_stop{false};

void on_signal(int) { g_stop = true; }

void wait_for_signal(const std::function<void()>& every_second = {}) {
  while (!g_stop) {
    std::this_thread::sleep_for(std::chrono::milliseconds(200));
    static auto last = std::chrono::steady_clock::now();
    if (every_second && std::chrono::steady_clock::now() - last >= std::chrono::seconds(1)) {
      last = std::chrono::steady_clock::now();
      every_second();
    }
  }
}

struct Common {
  std::string config_file;
  std::vector<std::string> overrides;

  Config load() const {
    std::optional<std::filesystem::path> file;
    if (!config_file.empty()) file = config_file;
    Config c = Config::load(file, current_environment());
    for (const auto& kv : overrides) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
      c.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    return c;
  }
};

void add_common(CLI::App* app, Common& common) {
  app->add_option("-c,--config", common.config_file, "JSON configuration file")->check(CLI::ExistingFile);
  app->add_option("--set", common.overrides, "Override a configuration key (key=value), repeatable");
}

MqttOptions mqtt_options(const Config& c, const std::string& fallback_id) {
  MqttOptions o;
  o.host = c.get_string("mqtt.host");
  o.port = static_cast<int>(c.get_int("mqtt.port"));
  o.client_id = c.get_string("mqtt.client_id");
  if (o.client_id.empty()) o.client_id = fallback_id;
  o.username = c.get_string("mqtt.username");
  o.password = c.get_string("mqtt.password");
  o.keepalive_s = static_cast<int>(c.get_int("mqtt.keepalive_s"));
  return o;
}

std::unique_ptr<MqttClient> connect_bus(const Config& c, const std::string& id) {
  auto client = std::make_unique<MqttClient>(mqtt_options(c, id));
  client->connect();
  return client;
}

/// Registers with the coordinator when `coordination.url` is set. A missing
/// or unreachable coordinator only produces a warning.
std::unique_ptr<CoordinatorClient> announce(const Config& c, const std::vector<EntityKind>& kinds,
                                            const std::optional<std::string>& sensor_type = std::nullopt,
                                            const std::string& stream_id = {}) {
  const auto url = c.get_string("coordination.url");
  if (url.empty()) return nullptr;
  auto client = std::make_unique<CoordinatorClient>(url, c.get_int("coordination.heartbeat_interval_ms"));
  try {
    std::string last;
    for (auto kind : kinds) last = client->register_entity(kind, c.get_string("node.site"), sensor_type);
    if (!stream_id.empty()) {
      const auto a = client->assign(last, stream_id);
      std::printf("stream %s assigned to detector %s\n", stream_id.c_str(), a.detector_entity_id.c_str());
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "coordinator: %s\n", e.what());
  }
  client->start_heartbeats();
  return client;
}

int run_broker(int port, const std::string& bind) {
  MqttBroker broker(port, bind);
  broker.start();
  std::printf("broker listening on %s:%d\n", bind.c_str(), broker.port());
  std::fflush(stdout);
  wait_for_signal();
  broker.stop();
  return 0;
}

int run_edge(const Config& c, bool detector, bool aggregator) {
  const auto id = c.get_string(detector ? "node.detector_id" : "node.aggregator_id");
  auto bus = connect_bus(c, id + (detector && aggregator ? "-edge" : ""));
  std::unique_ptr<AggregatorService> agg;
  std::unique_ptr<DetectorService> det;
  if (aggregator) {
    agg = std::make_unique<AggregatorService>(*bus, AggregatorServiceOptions::from_config(c));
    agg->start();
  }
  if (detector) {
    det = std::make_unique<DetectorService>(*bus, DetectorServiceOptions::from_config(c));
    det->start();
  }
  std::vector<EntityKind> kinds;
  if (detector) kinds.push_back(EntityKind::Detector);
  if (aggregator) kinds.push_back(EntityKind::Aggregator);
  auto coordinator = announce(c, kinds);
  std::printf("%s running at site %s\n", detector && aggregator ? "edge" : (detector ? "detector" : "aggregator"),
              c.get_string("node.site").c_str());
  std::fflush(stdout);
  wait_for_signal([&] {
    if (agg) agg->tick();
  });
  if (det) det->stop();
  if (agg) agg->stop();
  bus->disconnect();
  return 0;
}

int run_emulate(const Config& c, const std::string& profile_path, const std::string& stream_id,
                const std::string& site, double rate, std::int64_t count) {
  const StreamProfile profile = load_profile(profile_path);
  auto bus = connect_bus(c, "emulator-" + stream_id);
  EmulatorService service(*bus, Emulator(profile, stream_id, site));
  service.start();
  Config scoped = c;
  scoped.set("node.site", site);
  auto coordinator = announce(scoped, {EntityKind::Emulator}, profile.sensor_type, stream_id);
  const auto period = std::chrono::microseconds(static_cast<std::int64_t>(profile.sample_period_ms * 1000.0 / rate));
  auto next = std::chrono::steady_clock::now();
  for (std::int64_t i = 0; !g_stop && (count <= 0 || i < count); ++i) {
    service.tick(wall_clock_ms());
    next += period;
    std::this_thread::sleep_until(next);
  }
  service.stop();
  bus->disconnect();
  const auto stats = service.stats();
  std::printf("published %llu samples, %llu commands (%llu rejected)\n",
              static_cast<unsigned long long>(stats.published), static_cast<unsigned long long>(stats.commands),
              static_cast<unsigned long long>(stats.rejected));
  return 0;
}

int run_stream(const Config& c, const std::string& csv, const std::string& stream_id, const std::string& site,
               const std::string& sensor_type, double rate, bool loop) {
  CsvData data = read_csv(csv);
  if (data.skipped) std::fprintf(stderr, "skipped %llu malformed rows\n", static_cast<unsigned long long>(data.skipped));
  auto bus = connect_bus(c, "streamer-" + stream_id);
  SampleMetadata meta;
  meta.sensor_type = sensor_type;
  Streamer streamer(std::move(data), stream_id, site, meta);
  const std::string topic = data_topic(site, stream_id);
  Config scoped = c;
  scoped.set("node.site", site);
  auto coordinator = announce(scoped, {EntityKind::Streamer}, sensor_type, stream_id);
  const auto sent = streamer.run([&](const Sample& s) { publish_envelope(*bus, topic, make_envelope(s)); }, rate,
                                 loop, Streamer::default_sleeper(), &g_stop);
  bus->disconnect();
  std::printf("streamed %llu samples\n", static_cast<unsigned long long>(sent));
  return 0;
}

int run_coordinator(const Config& c, bool with_bus) {
  auto options = CoordinatorOptions::from_config(c);
  EventHub events;
  Registry registry(options.registry, wall_clock_ms, &events);
  std::unique_ptr<MqttClient> bus;
  std::unique_ptr<CoordinatorBridge> bridge;
  if (with_bus) {
    bus = connect_bus(c, "coordinator");
    bridge = std::make_unique<CoordinatorBridge>(*bus, registry);
    bridge->start();
  }
  CoordinatorServer server(registry, events, options, bridge.get());
  const int port = server.start();
  std::printf("coordinator listening on %s:%d\n", options.host.c_str(), port);
  std::fflush(stdout);
  wait_for_signal();
  server.stop();
  if (bridge) bridge->stop();
  if (bus) bus->disconnect();
  return 0;
}

int run_scenarios(int seeds, const std::string& which, ScenarioOptions options) {
  int failures = 0;
  for (int s = 1; s <= seeds; ++s) {
    for (auto script : {ScenarioScript::NaturalAllOfType, ScenarioScript::AbnormalSingle}) {
      if (which != "both" && which != to_string(script)) continue;
      options.seed = static_cast<std::uint64_t>(s);
      const auto r = run_scenario(script, options);
      const bool ok = r.correct && r.privacy.violations == 0;
      failures += ok ? 0 : 1;
      std::printf("seed=%d script=%s %s %s privacy=%llu/%llu\n", s, std::string(to_string(script)).c_str(),
                  ok ? "PASS" : "FAIL", r.detail.c_str(), static_cast<unsigned long long>(r.privacy.violations),
                  static_cast<unsigned long long>(r.privacy.payloads));
    }
  }
  return failures == 0 ? 0 : 1;
}

int run_fit(const std::string& csv, const std::string& sensor_type, const std::string& unit) {
  const CsvData data = read_csv(csv);
  StreamProfile p = fit_profile(data.rows);
  p.sensor_type = sensor_type;
  p.unit = unit;
  std::cout << wire::to_json(p).dump(2) << "\n";
  if (data.skipped) std::fprintf(stderr, "skipped %llu malformed rows\n", static_cast<unsigned long long>(data.skipped));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"le3d: distributed drift detection for sensor streams"};
  app.require_subcommand(1);
  Common common;

  auto* broker = app.add_subcommand("broker", "Run the embedded MQTT broker");
  int broker_port = 1883;
  std::string broker_bind = "0.0.0.0";
  broker->add_option("--port", broker_port, "Listen port (0 = ephemeral)");
  broker->add_option("--bind", broker_bind, "Bind address");

  auto* detector = app.add_subcommand("detector", "Run a detector");
  add_common(detector, common);
  auto* aggregator = app.add_subcommand("aggregator", "Run an aggregator");
  add_common(aggregator, common);
  auto* edge = app.add_subcommand("edge", "Run a detector and its aggregator in one process");
  add_common(edge, common);

  std::string profile, stream_id, site = "site-1", csv, sensor_type = "generic", unit;
  double rate = 1.0;
  std::int64_t count = 0;
  bool loop = false;

  auto* emulate = app.add_subcommand("emulate", "Run an emulated sensor stream");
  add_common(emulate, common);
  emulate->add_option("--profile", profile, "Stream profile JSON")->required()->check(CLI::ExistingFile);
  emulate->add_option("--stream-id", stream_id, "Stream id")->required();
  emulate->add_option("--site", site, "Site");
  emulate->add_option("--rate", rate, "Speed-up factor")->check(CLI::PositiveNumber);
  emulate->add_option("--count", count, "Stop after this many samples (0 = run until interrupted)");

  auto* stream = app.add_subcommand("stream", "Replay a timestamp,value CSV as a stream");
  add_common(stream, common);
  stream->add_option("--csv", csv, "CSV file")->required()->check(CLI::ExistingFile);
  stream->add_option("--stream-id", stream_id, "Stream id")->required();
  stream->add_option("--site", site, "Site");
  stream->add_option("--sensor-type", sensor_type, "Sensor type metadata");
  stream->add_option("--rate", rate, "Speed-up factor")->check(CLI::PositiveNumber);
  stream->add_flag("--loop", loop, "Restart from the first row at the end");

  auto* coordinator = app.add_subcommand("coordinator", "Run the coordination service");
  add_common(coordinator, common);
  bool no_bus = false;
  coordinator->add_flag("--no-bus", no_bus, "Serve the REST API without connecting to the broker");

  auto* scenario = app.add_subcommand("scenario", "Run the natural/abnormal scenario on the loopback bus");
  int seeds = 20;
  std::string script = "both";
  ScenarioOptions scenario_options;
  scenario->add_option("--seeds", seeds, "Number of seeded repetitions")->check(CLI::PositiveNumber);
  scenario->add_option("--script", script, "natural, abnormal or both")
      ->check(CLI::IsMember({"natural", "abnormal", "both"}));
  scenario->add_option("--magnitude", scenario_options.magnitude, "Step magnitude");
  scenario->add_option("--vote-window", scenario_options.vote_window, "Detector vote window");

  auto* fit = app.add_subcommand("fit-profile", "Fit a stream profile to a CSV recording");
  fit->add_option("--csv", csv, "CSV file")->required()->check(CLI::ExistingFile);
  fit->add_option("--sensor-type", sensor_type, "Sensor type of the profile");
  fit->add_option("--unit", unit, "Unit of the profile");

  CLI11_PARSE(app, argc, argv);

  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);

  try {
    if (*broker) return run_broker(broker_port, broker_bind);
    if (*detector) return run_edge(common.load(), true, false);
    if (*aggregator) return run_edge(common.load(), false, true);
    if (*edge) return run_edge(common.load(), true, true);
    if (*emulate) return run_emulate(common.load(), profile, stream_id, site, rate, count);
    if (*stream) return run_stream(common.load(), csv, stream_id, site, sensor_type, rate, loop);
    if (*coordinator) return run_coordinator(common.load(), !no_bus);
    if (*scenario) return run_scenarios(seeds, script, scenario_options);
    if (*fit) return run_fit(csv, sensor_type, unit);
  } catch (const le3d::Error& e) {
    std::fprintf(stderr, "le3d: %s\n", e.what());
    return 2;
  }
  return 0;
}

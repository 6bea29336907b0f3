#include "le3d/scenario.hpp"

#include <cctype>

#include "le3d/transport/topic.hpp"

namespace le3d {

bool payload_is_private(std::string_view p) {
  const auto skip_ws = [&](std::size_t i) {
    while (i < p.size() && std::isspace(static_cast<unsigned char>(p[i]))) ++i;
    return i;
  };
  constexpr std::string_view key = "\"value\"";
  for (auto pos = p.find(key); pos != std::string_view::npos; pos = p.find(key, pos + 1)) {
    const auto next = skip_ws(pos + key.size());
    if (next < p.size() && p[next] == ':') return false;
  }
  bool in_string = false;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const char c = p[i];
    if (in_string) {
      if (c == '\\') {
        ++i;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == '[') {
      const auto next = skip_ws(i + 1);
      if (next < p.size() && (std::isdigit(static_cast<unsigned char>(p[next])) || p[next] == '-' || p[next] == '.')) {
        return false;
      }
    }
  }
  return true;
}

PrivacyScan scan_privacy(const std::vector<Message>& messages) {
  PrivacyScan scan;
  for (const auto& m : messages) {
    Topic t;
    try {
      t = parse_topic(m.topic);
    } catch (const Error&) {
      continue;
    }
    if (t.channel != Channel::Decision && t.channel != Channel::Aggregate && t.channel != Channel::Class) continue;
    ++scan.payloads;
    if (!payload_is_private(m.payload)) {
      if (scan.violations++ == 0) scan.first_violation = m.topic + " " + m.payload;
    }
  }
  return scan;
}

ScenarioStack::ScenarioStack(const ScenarioOptions& options) : options_(options), clock_(0) {
  bus_.subscribe("le3d/#", [this](const Message& m) { messages_.push_back(m); });
  for (int i = 0; i < options_.sites; ++i) {
    StreamProfile profile;
    profile.mean = options_.mean;
    profile.stddev = options_.stddev;
    profile.sample_period_ms = options_.period_ms;
    profile.seed = options_.seed * 1000003ULL + static_cast<std::uint64_t>(i);
    profile.sensor_type = options_.sensor_type;
    profile.unit = "C";
    emulators_.push_back(std::make_unique<EmulatorService>(bus_, Emulator(profile, stream(i), site(i))));

    DetectorServiceOptions d;
    d.detector_id = "detector-" + std::to_string(i);
    d.site = site(i);
    d.vote_window = options_.vote_window;
    detectors_.push_back(std::make_unique<DetectorService>(bus_, d));

    AggregatorServiceOptions a;
    a.core.aggregator_id = "aggregator-" + std::to_string(i);
    a.core.detector_id = d.detector_id;
    a.core.site = site(i);
    a.core.concurrency_window_ms = options_.concurrency_window_ms;
    aggregators_.push_back(std::make_unique<AggregatorService>(bus_, a, clock_.as_clock()));
  }
  for (auto& a : aggregators_) a->start();
  for (auto& d : detectors_) d->start();
  for (auto& e : emulators_) e->start();
}

ScenarioStack::~ScenarioStack() {
  for (auto& e : emulators_) e->stop();
  for (auto& d : detectors_) d->stop();
  for (auto& a : aggregators_) a->stop();
}

std::string ScenarioStack::site(int i) const { return "site-" + std::to_string(i); }
std::string ScenarioStack::stream(int i) const { return "temp-" + std::to_string(i); }

void ScenarioStack::step() {
  clock_.advance(options_.period_ms);
  for (auto& e : emulators_) e->tick(clock_.now());
  for (auto& a : aggregators_) a->tick();
}

void ScenarioStack::run(int steps) {
  for (int i = 0; i < steps; ++i) step();
}

void ScenarioStack::inject(const DriftCommand& cmd, int site_index) {
  DriftCommand c = cmd;
  c.issued_at = clock_.now();
  publish_envelope(bus_, command_topic(c, site(site_index)), make_envelope(c));
}

std::vector<ClassReport> ScenarioStack::class_history(int i) const {
  const std::string prefix = "le3d/class/" + site(i) + "/";
  std::vector<ClassReport> out;
  for (const auto& m : messages_) {
    if (m.retained || m.topic.rfind(prefix, 0) != 0) continue;
    out.push_back(decode_as<ClassReport>(m.payload));
  }
  return out;
}

std::string_view to_string(ScenarioScript s) noexcept {
  return s == ScenarioScript::NaturalAllOfType ? "natural" : "abnormal";
}

ScenarioResult run_scenario(ScenarioScript script, const ScenarioOptions& options) {
  ScenarioStack stack(options);
  ScenarioResult r;
  r.script = script;
  r.seed = options.seed;
  stack.run(options.warmup_samples);

  DriftCommand cmd;
  cmd.kind = DriftKind::Step;
  cmd.magnitude = options.magnitude;
  if (script == ScenarioScript::NaturalAllOfType) {
    cmd.scope = DriftScope::AllOfType;
    cmd.target = options.sensor_type;
  } else {
    cmd.scope = DriftScope::Single;
    cmd.target = stack.stream(0);
  }
  r.injected_at = stack.clock().now();
  stack.inject(cmd, 0);
  stack.run(options.post_samples);

  r.correct = true;
  const auto fail = [&](const std::string& why) {
    if (r.correct) r.detail = why;
    r.correct = false;
  };
  for (int i = 0; i < options.sites; ++i) {
    auto history = stack.class_history(i);
    const std::string who = stack.site(i);
    bool natural_in_window = false, abnormal = false, natural = false, early = false;
    for (const auto& rep : history) {
      const auto k = rep.drift_class.kind;
      if (k != DriftClassKind::None && rep.evaluated_at < r.injected_at) early = true;
      if (k == DriftClassKind::Natural) {
        natural = true;
        if (rep.evaluated_at - r.injected_at <= options.concurrency_window_ms) natural_in_window = true;
      }
      if (k == DriftClassKind::Abnormal) abnormal = true;
    }
    if (history.empty()) fail(who + ": no class published");
    if (early) fail(who + ": drift classified before injection");
    if (script == ScenarioScript::NaturalAllOfType) {
      if (!natural_in_window) fail(who + ": no Natural within the concurrency window");
    } else if (i == 0) {
      if (!abnormal) fail(who + ": no Abnormal");
      if (natural) fail(who + ": Natural published for a single-stream drift");
    } else if (abnormal || natural) {
      fail(who + ": non-None class for a healthy stream");
    }
    r.class_history.push_back(std::move(history));
  }
  r.privacy = scan_privacy(stack.messages());
  if (r.correct) r.detail = "ok";
  return r;
}

}  // namespace le3d

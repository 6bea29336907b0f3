#include "doctest.h"
#include "le3d/scenario.hpp"
#include "le3d/transport/codec.hpp"

using namespace le3d;

TEST_SUITE("privacy-scan") {
  TEST_CASE("payload check") {
    CHECK(payload_is_private(R"({"stream_id":"s","ks":{"statistic_d":0.5}})"));
    CHECK_FALSE(payload_is_private(R"({"value":20.5})"));
    CHECK_FALSE(payload_is_private(R"({"body":{"value" : 1}})"));
    CHECK_FALSE(payload_is_private(R"({"window":[1.5,2.5]})"));
    CHECK_FALSE(payload_is_private(R"({"window":[ -3]})"));
    CHECK(payload_is_private(R"({"streams":["a","b"],"note":"[1,2] and \"value\": in text"})"));
    CHECK(payload_is_private(R"({"empty":[]})"));
  }

  TEST_CASE("scan looks only at decision, aggregate and class topics") {
    std::vector<Message> msgs{{"le3d/data/lab/s1", R"({"value":1})", false},
                              {"le3d/relay/lab/s1", R"({"value":1})", false},
                              {"le3d/decision/lab/d/s1", R"({"ok":true})", true},
                              {"le3d/class/lab/s1", R"({"value":2})", true}};
    auto scan = scan_privacy(msgs);
    CHECK(scan.payloads == 2);
    CHECK(scan.violations == 1);
    CHECK(scan.first_violation.find("le3d/class/lab/s1") != std::string::npos);
  }
}

TEST_SUITE("scenario") {
  TEST_CASE("quiet warm-up publishes None everywhere") {
    ScenarioOptions o;
    ScenarioStack stack(o);
    stack.run(o.warmup_samples);
    for (int i = 0; i < o.sites; ++i) {
      auto h = stack.class_history(i);
      for (const auto& r : h) CHECK(r.drift_class.kind == DriftClassKind::None);
    }
    CHECK(scan_privacy(stack.messages()).violations == 0);
  }

  TEST_CASE("natural script") {
    ScenarioOptions o;
    o.seed = 3;
    auto r = run_scenario(ScenarioScript::NaturalAllOfType, o);
    INFO(r.detail);
    CHECK(r.correct);
    CHECK(r.privacy.violations == 0);
    CHECK(r.privacy.payloads > 0);
    REQUIRE(r.class_history.size() == 3);
  }

  TEST_CASE("abnormal script") {
    ScenarioOptions o;
    o.seed = 4;
    auto r = run_scenario(ScenarioScript::AbnormalSingle, o);
    INFO(r.detail);
    CHECK(r.correct);
    CHECK(r.privacy.violations == 0);
  }

  TEST_CASE("same seed gives the same message log") {
    ScenarioOptions o;
    o.warmup_samples = 200;
    o.post_samples = 100;
    auto log = [&] {
      ScenarioStack s(o);
      s.run(o.warmup_samples);
      s.inject({"temperature", DriftKind::Step, 1.0, 0, 0, DriftScope::AllOfType}, 0);
      s.run(o.post_samples);
      std::vector<std::string> out;
      for (const auto& m : s.messages()) out.push_back(m.topic + " " + m.payload);
      return out;
    };
    CHECK(log() == log());
  }
}

#include "le3d/transport/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "json.hpp"
#include "le3d/error.hpp"

extern char** environ;

namespace le3d {
namespace {

enum class Type { String, Int, Double, Bool };

struct KeySpec {
  const char* key;
  Type type;
  const char* default_value;
  double min = -std::numeric_limits<double>::infinity();
  double max = std::numeric_limits<double>::infinity();
  bool exclusive_min = false;
};

constexpr double kInf = std::numeric_limits<double>::infinity();

// clang-format off
const KeySpec kSchema[] = {
    {"node.site", Type::String, "site-1"},
    {"node.detector_id", Type::String, "detector-1"},
    {"node.aggregator_id", Type::String, "aggregator-1"},

    {"mqtt.host", Type::String, "127.0.0.1"},
    {"mqtt.port", Type::Int, "1883", 1, 65535},
    {"mqtt.client_id", Type::String, ""},
    {"mqtt.username", Type::String, ""},
    {"mqtt.password", Type::String, ""},
    {"mqtt.keepalive_s", Type::Int, "30", 1, 65535},

    {"detector.vote_window", Type::Int, "10", 1, 100000},
    {"detector.quorum_fraction", Type::Double, "0.5", 0, 1, true},
    {"detector.baseline_capacity", Type::Int, "300", 30, 1e7},
    {"detector.subscription", Type::String, ""},
    {"detector.relay", Type::Bool, "false"},
    {"detector.relay_buffer", Type::Int, "1000", 1, 1e7},
    {"detector.announce_after", Type::Int, "30", 1, 1e7},
    {"detector.default_estimators", Type::String, "adwin,pht,kswin"},

    {"estimators.adwin.delta", Type::Double, "0.002", 0, 1, true},
    {"estimators.adwin.max_buckets", Type::Int, "5", 1, 1000},
    {"estimators.pht.min_instances", Type::Int, "30", 1, 1e9},
    {"estimators.pht.delta", Type::Double, "0.005", 0, kInf},
    {"estimators.pht.lambda", Type::Double, "50", 0, kInf, true},
    {"estimators.pht.alpha", Type::Double, "0.9999", 0, 1, true},
    {"estimators.kswin.window_size", Type::Int, "100", 2, 1e6},
    {"estimators.kswin.stat_size", Type::Int, "30", 1, 1e6},
    {"estimators.kswin.alpha", Type::Double, "0.005", 0, 1, true},
    {"estimators.kswin.seed", Type::Int, "42", 0, 9.2e18},
    {"estimators.threshold.low", Type::Double, "-1e300"},
    {"estimators.threshold.high", Type::Double, "1e300"},

    {"aggregator.natural_quorum", Type::Int, "2", 2, 1e6},
    {"aggregator.concurrency_window_ms", Type::Int, "30000", 0, 1e12},
    {"aggregator.liveness_timeout_ms", Type::Int, "120000", 1, 1e12},
    {"aggregator.tau", Type::Double, "0.3", 0, 1},
    {"aggregator.gate", Type::Bool, "false"},
    {"aggregator.queue", Type::Int, "100", 1, 1e7},

    {"coordination.host", Type::String, "0.0.0.0"},
    {"coordination.port", Type::Int, "8080", 0, 65535},
    {"coordination.liveness_window_ms", Type::Int, "60000", 1, 1e12},
    {"coordination.heartbeat_interval_ms", Type::Int, "15000", 1, 1e12},
    {"coordination.history", Type::Int, "1000", 1, 1e7},
    {"coordination.control_wait_ms", Type::Int, "2000", 0, 60000},
    {"coordination.url", Type::String, ""},
    {"coordination.static_dir", Type::String, ""},
    {"coordination.series", Type::Int, "2000", 1, 1e7},
};
// clang-format on

constexpr const char* kEstimatorMapPrefix = "detector.estimators.";

const KeySpec* find_spec(const std::string& key) {
  for (const auto& s : kSchema) {
    if (key == s.key) return &s;
  }
  return nullptr;
}

bool parse_bool(const std::string& v, bool& out) {
  std::string l;
  for (char c : v) l.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (l == "true" || l == "1" || l == "yes" || l == "on") {
    out = true;
    return true;
  }
  if (l == "false" || l == "0" || l == "no" || l == "off") {
    out = false;
    return true;
  }
  return false;
}

std::string normalize(const std::string& key, const std::string& raw) {
  if (key.rfind(kEstimatorMapPrefix, 0) == 0) return raw;
  const KeySpec* spec = find_spec(key);
  if (spec == nullptr) throw ConfigError("unknown configuration key '" + key + "'");
  switch (spec->type) {
    case Type::String:
      return raw;
    case Type::Bool: {
      bool b;
      if (!parse_bool(raw, b)) throw ConfigError("configuration key '" + key + "' expects a boolean, got '" + raw + "'");
      return b ? "true" : "false";
    }
    case Type::Int:
    case Type::Double: {
      double d;
      std::size_t used = 0;
      try {
        d = std::stod(raw, &used);
      } catch (const std::exception&) {
        throw ConfigError("configuration key '" + key + "' expects a number, got '" + raw + "'");
      }
      if (used != raw.size() || !std::isfinite(d)) {
        throw ConfigError("configuration key '" + key + "' expects a number, got '" + raw + "'");
      }
      if (spec->type == Type::Int && d != std::floor(d)) {
        throw ConfigError("configuration key '" + key + "' expects an integer, got '" + raw + "'");
      }
      const bool below = spec->exclusive_min ? d <= spec->min : d < spec->min;
      if (below || d > spec->max) {
        std::ostringstream os;
        os << "configuration key '" << key << "' out of range: " << raw << " (allowed "
           << (spec->exclusive_min ? "(" : "[") << spec->min << ", " << spec->max << "])";
        throw ConfigError(os.str());
      }
      if (spec->type == Type::Int) {
        try {
          std::size_t n = 0;
          const long long exact = std::stoll(raw, &n);
          if (n == raw.size()) return std::to_string(exact);
        } catch (const std::exception&) {
        }
        return std::to_string(static_cast<long long>(d));
      }
      return raw;
    }
  }
  return raw;
}

void flatten(const nlohmann::json& j, const std::string& prefix, std::map<std::string, std::string>& out) {
  if (j.is_object()) {
    for (const auto& [k, v] : j.items()) flatten(v, prefix.empty() ? k : prefix + "." + k, out);
    return;
  }
  if (j.is_string()) {
    out[prefix] = j.get<std::string>();
  } else if (j.is_boolean()) {
    out[prefix] = j.get<bool>() ? "true" : "false";
  } else if (j.is_number_integer()) {
    out[prefix] = std::to_string(j.get<std::int64_t>());
  } else if (j.is_number()) {
    std::ostringstream os;
    os.precision(17);
    os << j.get<double>();
    out[prefix] = os.str();
  } else if (j.is_array()) {
    std::string joined;
    for (const auto& e : j) {
      if (!e.is_string()) throw ConfigError("configuration key '" + prefix + "' expects a list of strings");
      if (!joined.empty()) joined += ",";
      joined += e.get<std::string>();
    }
    out[prefix] = joined;
  } else {
    throw ConfigError("configuration key '" + prefix + "' has an unsupported value");
  }
}

}  // namespace

Environment current_environment() {
  Environment env;
  for (char** e = environ; e != nullptr && *e != nullptr; ++e) {
    std::string s(*e);
    const auto eq = s.find('=');
    if (eq == std::string::npos) continue;
    env[s.substr(0, eq)] = s.substr(eq + 1);
  }
  return env;
}

std::string env_name_for(const std::string& key) {
  std::string out = "LE3D_";
  for (char c : key) {
    out.push_back(c == '.' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  }
  return out;
}

Config Config::defaults() {
  Config c;
  for (const auto& s : kSchema) c.values_[s.key] = s.default_value;
  return c;
}

Config Config::load(const std::optional<std::filesystem::path>& file, const Environment& env) {
  Config c = defaults();
  if (file) {
    std::ifstream in(*file);
    if (!in) throw ConfigError("cannot read configuration file " + file->string());
    nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
      throw ConfigError("configuration file " + file->string() + " is not a JSON object");
    }
    std::map<std::string, std::string> flat;
    flatten(j, "", flat);
    for (const auto& [k, v] : flat) c.set(k, v);
  }
  for (const auto& s : kSchema) {
    if (auto it = env.find(env_name_for(s.key)); it != env.end()) c.set(s.key, it->second);
  }
  const std::string map_env = env_name_for(kEstimatorMapPrefix);  // LE3D_DETECTOR_ESTIMATORS_
  for (const auto& [name, value] : env) {
    if (name.rfind(map_env, 0) != 0 || name.size() == map_env.size()) continue;
    std::string type;
    for (char ch : name.substr(map_env.size())) {
      type.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
    }
    c.set(kEstimatorMapPrefix + type, value);
  }
  if (c.get_int("estimators.kswin.stat_size") >= c.get_int("estimators.kswin.window_size")) {
    throw ConfigError("configuration key 'estimators.kswin.stat_size' must be smaller than window_size");
  }
  if (c.get_double("estimators.threshold.low") > c.get_double("estimators.threshold.high")) {
    throw ConfigError("configuration key 'estimators.threshold.low' exceeds 'estimators.threshold.high'");
  }
  return c;
}

void Config::set(const std::string& key, const std::string& value) { values_[key] = normalize(key, value); }

std::string Config::get_string(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("configuration key '" + key + "' is not set");
  return it->second;
}

std::int64_t Config::get_int(const std::string& key) const {
  return std::stoll(get_string(key));
}

double Config::get_double(const std::string& key) const { return std::stod(get_string(key)); }

bool Config::get_bool(const std::string& key) const { return get_string(key) == "true"; }

std::vector<std::string> Config::keys_with_prefix(const std::string& prefix) const {
  std::vector<std::string> out;
  for (const auto& [k, v] : values_) {
    if (k.rfind(prefix, 0) == 0) out.push_back(k);
  }
  return out;
}

}  // namespace le3d

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace le3d {

using Environment = std::map<std::string, std::string>;

/// Snapshot of the process environment.
Environment current_environment();

/// Environment variable that overrides `key`: LE3D_ + upper-snake of the dotted key.
std::string env_name_for(const std::string& key);

/// Layered configuration: built-in defaults <- config file <- LE3D_ environment.
///
/// Keys are dotted paths (`detector.vote_window`). Config files are JSON;
/// nested objects are flattened into dotted keys. Every fixed key has a
/// documented default and range; `detector.estimators.<sensor_type>` keys
/// are open-ended.
class Config {
 public:
  /// Throws ConfigError on unparseable files, unknown keys or out-of-range values.
  static Config load(const std::optional<std::filesystem::path>& file, const Environment& env);
  static Config defaults();

  std::string get_string(const std::string& key) const;
  std::int64_t get_int(const std::string& key) const;
  double get_double(const std::string& key) const;
  bool get_bool(const std::string& key) const;

  /// Validates and overrides a single key (CLI flags sit above the env layer).
  void set(const std::string& key, const std::string& value);

  bool contains(const std::string& key) const { return values_.count(key) > 0; }
  /// Keys under a prefix, e.g. "detector.estimators.".
  std::vector<std::string> keys_with_prefix(const std::string& prefix) const;
  const std::map<std::string, std::string>& values() const noexcept { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace le3d

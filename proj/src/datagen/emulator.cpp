#include "le3d/datagen/emulator.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>

#include "le3d/error.hpp"
#include "le3d/transport/json_codec.hpp"
#include "le3d/transport/topic.hpp"

namespace le3d {
namespace {

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  const auto e = s.find_last_not_of(" \t\r\n");
  return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

template <class T>
bool parse_number(const std::string& s, T& out) {
  if (s.empty()) return false;
  if constexpr (std::is_floating_point_v<T>) {
    try {
      std::size_t used = 0;
      out = static_cast<T>(std::stod(s, &used));
      return used == s.size();
    } catch (const std::exception&) {
      return false;
    }
  } else {
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size();
  }
}

}  // namespace

CsvData parse_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw InputError("csv: file is empty, expected header 'timestamp,value'");
  std::string header;
  for (char c : trim(line)) {
    if (c != ' ') header.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  if (header.rfind("\xef\xbb\xbf", 0) == 0) header = header.substr(3);
  if (header != "timestamp,value") {
    throw InputError("csv: expected header 'timestamp,value', got '" + trim(line) + "'");
  }
  CsvData data;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty()) continue;
    const auto comma = line.find(',');
    CsvRow row;
    if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos ||
        !parse_number(trim(line.substr(0, comma)), row.timestamp) ||
        !parse_number(trim(line.substr(comma + 1)), row.value) || !std::isfinite(row.value) ||
        row.timestamp < 0) {
      ++data.skipped;
      continue;
    }
    data.rows.push_back(row);
  }
  return data;
}

CsvData read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("csv: cannot open " + path.string());
  return parse_csv(in);
}

StreamProfile fit_profile(std::span<const CsvRow> rows) {
  if (rows.size() < 2) throw InputError("fit_profile: need at least 2 rows, got " + std::to_string(rows.size()));
  double mean = 0.0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (!std::isfinite(rows[i].value)) {
      throw InputError("fit_profile: row " + std::to_string(i) + " has a non-finite value");
    }
    if (i > 0 && rows[i].timestamp < rows[i - 1].timestamp) {
      throw InputError("fit_profile: row " + std::to_string(i) + " has a decreasing timestamp");
    }
    mean += (rows[i].value - mean) / static_cast<double>(i + 1);
  }
  double ss = 0.0;
  for (const auto& r : rows) ss += (r.value - mean) * (r.value - mean);

  std::vector<std::int64_t> gaps;
  for (std::size_t i = 1; i < rows.size(); ++i) gaps.push_back(rows[i].timestamp - rows[i - 1].timestamp);
  std::sort(gaps.begin(), gaps.end());
  const std::size_t mid = gaps.size() / 2;
  const std::int64_t median = gaps.size() % 2 ? gaps[mid] : (gaps[mid - 1] + gaps[mid]) / 2;

  StreamProfile p;
  p.mean = mean;
  p.stddev = std::sqrt(ss / static_cast<double>(rows.size() - 1));
  p.sample_period_ms = std::max<std::int64_t>(1, median);
  return p;
}

StreamProfile load_profile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read profile " + path.string());
  auto j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw ConfigError("profile " + path.string() + " is not a JSON object");
  try {
    return wire::profile_from_json(j);
  } catch (const DecodeError& e) {
    throw ConfigError(std::string("profile ") + path.string() + ": " + e.what());
  }
}

Emulator::Emulator(StreamProfile profile, std::string stream_id, std::string site)
    : profile_(std::move(profile)), stream_id_(std::move(stream_id)), site_(std::move(site)), rng_(profile_.seed) {
  profile_.validate();
  if (!is_valid_segment(stream_id_)) throw ConfigError("emulator: invalid stream id '" + stream_id_ + "'");
  if (!is_valid_segment(site_)) throw ConfigError("emulator: invalid site '" + site_ + "'");
}

double Emulator::draw() {
  if (profile_.noise_model == NoiseModel::UniformJitter) {
    // Unit variance: U(-sqrt(3), sqrt(3)).
    return (2.0 * rng_.uniform() - 1.0) * std::sqrt(3.0);
  }
  return rng_.normal();
}

double Emulator::active_offset(TimestampMs now) const {
  double offset = 0.0;
  if (step_ && step_->live(now)) offset += step_->magnitude;
  if (ramp_ && now >= ramp_->issued_at) {
    const double progress =
        std::min(1.0, static_cast<double>(now - ramp_->issued_at) / static_cast<double>(ramp_->duration_ms));
    offset += ramp_->magnitude * progress;
  }
  return offset;
}

double Emulator::active_noise_scale(TimestampMs now) const {
  return noise_ && noise_->live(now) ? noise_->magnitude : 1.0;
}

std::optional<double> Emulator::active_stuck_value(TimestampMs now) const {
  if (stuck_ && stuck_->live(now)) return stuck_->magnitude;
  return std::nullopt;
}

Sample Emulator::next_sample(TimestampMs now) {
  const double z = draw();
  Sample s;
  s.stream_id = stream_id_;
  s.site = site_;
  s.timestamp = now;
  s.seq = seq_++;
  s.metadata.sensor_type = profile_.sensor_type;
  s.metadata.unit = profile_.unit;
  if (auto stuck = active_stuck_value(now)) {
    s.value = *stuck;
  } else {
    s.value = profile_.mean + active_offset(now) + z * profile_.stddev * active_noise_scale(now);
  }
  return s;
}

bool Emulator::addressed_by(const DriftCommand& cmd) const {
  return cmd.scope == DriftScope::Single ? cmd.target == stream_id_ : cmd.target == profile_.sensor_type;
}

std::optional<CommandAck> Emulator::apply_drift(const DriftCommand& cmd, TimestampMs now) {
  if (!addressed_by(cmd)) return std::nullopt;
  CommandAck ack;
  ack.stream_id = stream_id_;
  ack.target = cmd.target;
  ack.kind = cmd.kind;
  ack.acked_at = now;
  if (!std::isfinite(cmd.magnitude)) {
    ack.reason = "magnitude must be finite";
    return ack;
  }
  if (cmd.duration_ms < 0) {
    ack.reason = "duration_ms must be >= 0";
    return ack;
  }
  const Active active{cmd.magnitude, cmd.issued_at, cmd.duration_ms};
  switch (cmd.kind) {
    case DriftKind::Step:
      if (cmd.magnitude == 0.0) {
        step_.reset();
      } else {
        step_ = active;
      }
      break;
    case DriftKind::Ramp:
      if (cmd.duration_ms <= 0) {
        ack.reason = "ramp duration_ms must be > 0";
        return ack;
      }
      if (cmd.magnitude == 0.0) {
        ramp_.reset();
      } else {
        ramp_ = active;
      }
      break;
    case DriftKind::StuckAt:
      stuck_ = active;
      break;
    case DriftKind::NoiseScale:
      if (!(cmd.magnitude > 0.0)) {
        ack.reason = "magnitude must be > 0";
        return ack;
      }
      noise_ = active;
      break;
  }
  ack.accepted = true;
  return ack;
}

void Emulator::clear_drifts() {
  step_.reset();
  ramp_.reset();
  stuck_.reset();
  noise_.reset();
}

}  // namespace le3d

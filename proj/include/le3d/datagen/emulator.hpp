#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "le3d/datagen/types.hpp"
#include "le3d/random.hpp"

namespace le3d {

struct CsvRow {
  TimestampMs timestamp = 0;
  double value = 0.0;
};

struct CsvData {
  std::vector<CsvRow> rows;
  std::uint64_t skipped = 0;
};

/// Reads a two-column `timestamp,value` CSV with a header row. Malformed
/// rows are skipped and counted; a missing or wrong header throws InputError.
CsvData parse_csv(std::istream& in);
CsvData read_csv(const std::filesystem::path& path);

/// Mean, sample standard deviation (n-1) and median inter-arrival gap.
/// Throws InputError for fewer than two rows, non-finite values or
/// decreasing timestamps.
StreamProfile fit_profile(std::span<const CsvRow> rows);

/// Reads a flat JSON document whose keys are the StreamProfile fields.
StreamProfile load_profile(const std::filesystem::path& path);

/// Synthetic sensor: i.i.d. noise around a level shaped by active drifts.
class Emulator {
 public:
  Emulator(StreamProfile profile, std::string stream_id, std::string site);

  /// value = mean + offset(now) + z * stddev * noise_scale(now), unless a
  /// stuck-at drift is active. seq increases by one per call.
  Sample next_sample(TimestampMs now);

  /// nullopt when the command is addressed to another emulator; otherwise an
  /// ack (accepted) or a nack with a reason.
  std::optional<CommandAck> apply_drift(const DriftCommand& cmd, TimestampMs now);

  /// Removes every active drift.
  void clear_drifts();

  double active_offset(TimestampMs now) const;
  double active_noise_scale(TimestampMs now) const;
  std::optional<double> active_stuck_value(TimestampMs now) const;

  bool addressed_by(const DriftCommand& cmd) const;

  const StreamProfile& profile() const noexcept { return profile_; }
  const std::string& stream_id() const noexcept { return stream_id_; }
  const std::string& site() const noexcept { return site_; }
  std::uint64_t next_seq() const noexcept { return seq_; }

 private:
  struct Active {
    double magnitude = 0.0;
    TimestampMs issued_at = 0;
    std::int64_t duration_ms = 0;

    bool live(TimestampMs now) const {
      return now >= issued_at && (duration_ms == 0 || now < issued_at + duration_ms);
    }
  };

  double draw();

  StreamProfile profile_;
  std::string stream_id_;
  std::string site_;
  Rng rng_;
  std::uint64_t seq_ = 0;
  std::optional<Active> step_;
  std::optional<Active> ramp_;
  std::optional<Active> stuck_;
  std::optional<Active> noise_;
};

}  // namespace le3d

#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <functional>
#include <string>

#include "le3d/datagen/emulator.hpp"

namespace le3d {

/// Replays CSV rows as samples, paced by the recorded gaps divided by `rate`.
class Streamer {
 public:
  using Sink = std::function<void(const Sample&)>;
  using Sleeper = std::function<void(std::chrono::microseconds)>;

  Streamer(CsvData data, std::string stream_id, std::string site, SampleMetadata metadata = {});

  /// Emits every row (repeating when `loop`), sleeping between rows. Seq
  /// numbers start at 0 and keep increasing across loops; looped timestamps
  /// are shifted by the span of the file plus one median period. Returns the
  /// number of samples emitted. A set `stop` flag ends the run.
  std::uint64_t run(const Sink& sink, double rate = 1.0, bool loop = false,
                    const Sleeper& sleeper = default_sleeper(), const std::atomic<bool>* stop = nullptr);

  static Sleeper default_sleeper();

  const CsvData& data() const noexcept { return data_; }

 private:
  CsvData data_;
  std::string stream_id_;
  std::string site_;
  SampleMetadata metadata_;
};

}  // namespace le3d

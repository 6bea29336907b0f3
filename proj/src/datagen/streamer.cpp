#include "le3d/datagen/streamer.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "le3d/error.hpp"
#include "le3d/transport/topic.hpp"

namespace le3d {

Streamer::Streamer(CsvData data, std::string stream_id, std::string site, SampleMetadata metadata)
    : data_(std::move(data)), stream_id_(std::move(stream_id)), site_(std::move(site)), metadata_(std::move(metadata)) {
  if (!is_valid_segment(stream_id_)) throw ConfigError("streamer: invalid stream id '" + stream_id_ + "'");
  if (!is_valid_segment(site_)) throw ConfigError("streamer: invalid site '" + site_ + "'");
}

Streamer::Sleeper Streamer::default_sleeper() {
  return [](std::chrono::microseconds d) { std::this_thread::sleep_for(d); };
}

std::uint64_t Streamer::run(const Sink& sink, double rate, bool loop, const Sleeper& sleeper,
                            const std::atomic<bool>* stop) {
  if (!(rate > 0.0) || !std::isfinite(rate)) throw ConfigError("streamer: rate must be > 0");
  const auto& rows = data_.rows;
  if (rows.empty()) return 0;

  std::int64_t period = 1;
  if (rows.size() >= 2) period = fit_profile(rows).sample_period_ms;
  const std::int64_t span = rows.back().timestamp - rows.front().timestamp + period;

  std::uint64_t seq = 0;
  std::int64_t shift = 0;
  do {
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (stop && stop->load()) return seq;
      std::int64_t gap = 0;
      if (i > 0) {
        gap = rows[i].timestamp - rows[i - 1].timestamp;
      } else if (seq > 0) {
        gap = period;
      }
      if (gap > 0) {
        sleeper(std::chrono::microseconds(static_cast<std::int64_t>(std::llround(gap * 1000.0 / rate))));
      }
      Sample s;
      s.stream_id = stream_id_;
      s.site = site_;
      s.timestamp = rows[i].timestamp + shift;
      s.value = rows[i].value;
      s.seq = seq++;
      s.metadata = metadata_;
      sink(s);
    }
    shift += span;
  } while (loop);
  return seq;
}

}  // namespace le3d

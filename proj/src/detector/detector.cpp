#include "le3d/detector/detector.hpp"

#include <cmath>
#include <set>

#include "le3d/error.hpp"

namespace le3d {

void StreamBinding::validate() const {
  if (stream_id.empty()) throw ConfigError("binding: stream_id must not be empty");
  if (estimators.empty()) throw ConfigError("binding '" + stream_id + "': estimator set must not be empty");
  std::set<EstimatorKind> kinds;
  for (const auto& e : estimators) {
    if (!kinds.insert(kind_of(e)).second) {
      throw ConfigError("binding '" + stream_id + "': estimator kind '" +
                        std::string(to_string(kind_of(e))) + "' listed twice");
    }
  }
  if (vote_window < 1) throw ConfigError("binding '" + stream_id + "': vote_window must be positive");
  if (!(quorum_fraction > 0.0 && quorum_fraction <= 1.0)) {
    throw ConfigError("binding '" + stream_id + "': quorum_fraction must be in (0,1]");
  }
  if (baseline_capacity < 30) throw ConfigError("binding '" + stream_id + "': baseline_capacity must be >= 30");
}

std::size_t quorum_count(std::size_t n, double quorum_fraction) {
  // Guard against products like 0.1 * 10 landing just above an integer.
  const double need = std::ceil(quorum_fraction * static_cast<double>(n) - 1e-9);
  return static_cast<std::size_t>(std::max(need, 0.0));
}

bool ensemble_vote(const std::map<EstimatorKind, bool>& votes, double quorum_fraction) {
  if (votes.empty()) throw InputError("ensemble_vote: votes must not be empty");
  std::size_t yes = 0;
  for (const auto& [kind, v] : votes) yes += v ? 1 : 0;
  return yes >= quorum_count(votes.size(), quorum_fraction);
}

Detector::Detector(std::string detector_id, std::string site, EstimatorFactory factory)
    : detector_id_(std::move(detector_id)), site_(std::move(site)), factory_(std::move(factory)) {}

void Detector::register_stream(const StreamBinding& binding) {
  binding.validate();
  if (streams_.count(binding.stream_id)) {
    throw ConflictError("stream '" + binding.stream_id + "' is already registered");
  }
  StreamState s;
  s.binding = binding;
  for (const auto& cfg : binding.estimators) {
    auto est = factory_(cfg);
    s.votes[est->kind()] = false;
    s.estimators.push_back(std::move(est));
  }
  s.last_flag.resize(s.estimators.size());
  streams_.emplace(binding.stream_id, std::move(s));
}

bool Detector::has_stream(const std::string& stream_id) const { return streams_.count(stream_id) > 0; }

std::vector<std::string> Detector::streams() const {
  std::vector<std::string> out;
  for (const auto& [id, s] : streams_) out.push_back(id);
  return out;
}

Detector::StreamState& Detector::lookup(const std::string& stream_id) {
  auto it = streams_.find(stream_id);
  if (it == streams_.end()) throw RoutingError("no binding for stream '" + stream_id + "'");
  return it->second;
}

const Detector::StreamState& Detector::lookup(const std::string& stream_id) const {
  auto it = streams_.find(stream_id);
  if (it == streams_.end()) throw RoutingError("no binding for stream '" + stream_id + "'");
  return it->second;
}

std::optional<DriftDecision> Detector::ingest_sample(const Sample& sample) {
  StreamState& s = lookup(sample.stream_id);
  if (s.last_seq && sample.seq <= *s.last_seq) {
    ++stats_.duplicates;
    return std::nullopt;
  }
  if (!std::isfinite(sample.value)) {
    ++stats_.invalid;
    throw InputError("sample " + std::to_string(sample.seq) + " of stream '" + sample.stream_id +
                     "' has a non-finite value");
  }
  s.last_seq = sample.seq;
  s.metadata = sample.metadata;
  s.last_timestamp = sample.timestamp;
  ++s.count;
  ++stats_.ingested;

  const auto window = static_cast<std::uint64_t>(s.binding.vote_window);
  for (std::size_t i = 0; i < s.estimators.size(); ++i) {
    if (s.estimators[i]->update(sample.value)) s.last_flag[i] = s.count;
    s.votes[s.estimators[i]->kind()] = s.last_flag[i] && s.count - *s.last_flag[i] < window;
  }
  const bool verdict = ensemble_vote(s.votes, s.binding.quorum_fraction);

  s.recent.push_back(sample.value);
  if (s.recent.size() > window) s.recent.pop_front();
  if (!verdict && !s.drifting) {
    s.baseline.push_back(sample.value);
    if (s.baseline.size() > s.binding.baseline_capacity) s.baseline.pop_front();
  }

  if (verdict == s.drifting) return std::nullopt;

  if (verdict) {
    const std::vector<double> ref(s.baseline.empty() ? s.recent.begin() : s.baseline.begin(),
                                  s.baseline.empty() ? s.recent.end() : s.baseline.end());
    s.frozen.emplace(ref);
  }
  const KsResult ks = baseline_test(s);
  s.drifting = verdict;
  if (!verdict) s.frozen.reset();
  ++stats_.decisions;
  return make_decision(s, ks);
}

KsResult Detector::baseline_test(const StreamState& s) const {
  if (s.recent.empty()) return {0.0, 1.0, 0, 0};
  const std::vector<double> window(s.recent.begin(), s.recent.end());
  if (s.frozen) return ks_one_sample(window, *s.frozen);
  if (s.baseline.empty()) return {0.0, 1.0, static_cast<std::uint32_t>(window.size()), 0};
  const std::vector<double> ref(s.baseline.begin(), s.baseline.end());
  return ks_one_sample(window, EmpiricalCdf(ref));
}

DriftDecision Detector::make_decision(const StreamState& s, const KsResult& ks) const {
  DriftDecision d;
  d.stream_id = s.binding.stream_id;
  d.detector_id = detector_id_;
  d.site = site_;
  d.decided_at = s.last_timestamp;
  d.drifting = s.drifting;
  d.votes = s.votes;
  d.ks = ks;
  d.metadata = s.metadata;
  d.seq_at_decision = s.last_seq.value_or(0);
  return d;
}

DriftDecision Detector::status(const std::string& stream_id) const {
  const StreamState& s = lookup(stream_id);
  return make_decision(s, baseline_test(s));
}

bool Detector::drifting(const std::string& stream_id) const { return lookup(stream_id).drifting; }

std::uint64_t Detector::samples_seen(const std::string& stream_id) const { return lookup(stream_id).count; }

std::size_t Detector::retained_values(const std::string& stream_id) const {
  const StreamState& s = lookup(stream_id);
  return s.recent.size() + s.baseline.size() + (s.frozen ? s.frozen->size() : 0);
}

EstimatorPolicy::EstimatorPolicy()
    : default_{AdwinConfig{}, PageHinkleyConfig{}, KswinConfig{}} {}

void EstimatorPolicy::set_default(std::vector<EstimatorConfig> set) {
  if (set.empty()) throw ConfigError("default estimator set must not be empty");
  default_ = std::move(set);
}

void EstimatorPolicy::set_for_type(const std::string& sensor_type, std::vector<EstimatorConfig> set) {
  if (set.empty()) throw ConfigError("estimator set for '" + sensor_type + "' must not be empty");
  by_type_[sensor_type] = std::move(set);
}

const std::vector<EstimatorConfig>& EstimatorPolicy::for_type(const std::string& sensor_type) const {
  auto it = by_type_.find(sensor_type);
  return it == by_type_.end() ? default_ : it->second;
}

}  // namespace le3d

#include "le3d/estimators/estimator.hpp"

#include <cctype>
#include <cmath>
#include <limits>

#include "le3d/error.hpp"

namespace le3d {

StaticThreshold::StaticThreshold(Config config) : config_(config) {
  if (!(config.low <= config.high)) throw ConfigError("threshold: low must not exceed high");
}

std::string_view to_string(EstimatorKind kind) noexcept {
  switch (kind) {
    case EstimatorKind::Adwin: return "adwin";
    case EstimatorKind::PageHinkley: return "pht";
    case EstimatorKind::Kswin: return "kswin";
    case EstimatorKind::StaticThreshold: return "threshold";
  }
  return "unknown";
}

EstimatorKind parse_estimator_kind(std::string_view name) {
  std::string lower;
  for (char c : name) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (lower == "adwin") return EstimatorKind::Adwin;
  if (lower == "pht" || lower == "page_hinkley" || lower == "pagehinkley") return EstimatorKind::PageHinkley;
  if (lower == "kswin") return EstimatorKind::Kswin;
  if (lower == "threshold" || lower == "static_threshold" || lower == "staticthreshold") {
    return EstimatorKind::StaticThreshold;
  }
  throw ConfigError("unknown estimator kind '" + std::string(name) + "'");
}

EstimatorKind kind_of(const EstimatorConfig& config) noexcept {
  return static_cast<EstimatorKind>(config.index());
}

EstimatorConfig default_config(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::Adwin: return AdwinConfig{};
    case EstimatorKind::PageHinkley: return PageHinkleyConfig{};
    case EstimatorKind::Kswin: return KswinConfig{};
    case EstimatorKind::StaticThreshold:
      return StaticThreshold::Config{-std::numeric_limits<double>::infinity(),
                                     std::numeric_limits<double>::infinity()};
  }
  throw ConfigError("unknown estimator kind");
}

namespace {

template <class Impl, EstimatorKind Kind>
class Wrapped final : public Estimator {
 public:
  template <class Cfg>
  explicit Wrapped(const Cfg& cfg) : impl_(cfg) {}
  EstimatorKind kind() const noexcept override { return Kind; }
  bool update(double value) override { return impl_.update(value); }
  Snapshot snapshot() const override { return impl_.snapshot(); }

 private:
  Impl impl_;
};

class ThresholdEstimator final : public Estimator {
 public:
  explicit ThresholdEstimator(StaticThreshold::Config cfg) : impl_(cfg) {}
  EstimatorKind kind() const noexcept override { return EstimatorKind::StaticThreshold; }
  bool update(double value) override {
    if (!std::isfinite(value)) throw InputError("threshold: value must be finite");
    return impl_.update(value);
  }
  Snapshot snapshot() const override {
    ByteWriter w;
    w.put(impl_.config().low).put(impl_.config().high);
    return {1, w.take()};
  }

 private:
  StaticThreshold impl_;
};

}  // namespace

std::unique_ptr<Estimator> make_estimator(const EstimatorConfig& config) {
  return std::visit(
      [](const auto& cfg) -> std::unique_ptr<Estimator> {
        using T = std::decay_t<decltype(cfg)>;
        if constexpr (std::is_same_v<T, AdwinConfig>) {
          return std::make_unique<Wrapped<Adwin, EstimatorKind::Adwin>>(cfg);
        } else if constexpr (std::is_same_v<T, PageHinkleyConfig>) {
          return std::make_unique<Wrapped<PageHinkley, EstimatorKind::PageHinkley>>(cfg);
        } else if constexpr (std::is_same_v<T, KswinConfig>) {
          return std::make_unique<Wrapped<Kswin, EstimatorKind::Kswin>>(cfg);
        } else {
          return std::make_unique<ThresholdEstimator>(cfg);
        }
      },
      config);
}

}  // namespace le3d

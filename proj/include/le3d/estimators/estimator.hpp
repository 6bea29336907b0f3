#pragma once

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include "le3d/estimators/adwin.hpp"
#include "le3d/estimators/kswin.hpp"
#include "le3d/estimators/page_hinkley.hpp"
#include "le3d/estimators/snapshot.hpp"
#include "le3d/estimators/static_threshold.hpp"

namespace le3d {

enum class EstimatorKind { Adwin, PageHinkley, Kswin, StaticThreshold };

/// Wire/config name of a kind: "adwin", "pht", "kswin", "threshold".
std::string_view to_string(EstimatorKind kind) noexcept;

/// Accepts the wire names plus a few long-form aliases. Throws ConfigError.
EstimatorKind parse_estimator_kind(std::string_view name);

using EstimatorConfig =
    std::variant<AdwinConfig, PageHinkleyConfig, KswinConfig, StaticThreshold::Config>;

EstimatorKind kind_of(const EstimatorConfig& config) noexcept;
EstimatorConfig default_config(EstimatorKind kind);

/// Interface the detector drives. One instance per (stream, kind).
class Estimator {
 public:
  virtual ~Estimator() = default;
  virtual EstimatorKind kind() const noexcept = 0;
  /// Feeds one sample; returns whether the estimator flags change.
  virtual bool update(double value) = 0;
  virtual Snapshot snapshot() const = 0;
};

/// Builds the built-in estimator for a config. Validates the config.
std::unique_ptr<Estimator> make_estimator(const EstimatorConfig& config);

}  // namespace le3d

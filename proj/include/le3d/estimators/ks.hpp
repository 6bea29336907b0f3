#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace le3d {

/// Summary of a Kolmogorov-Smirnov test. Shared by the two-sample test used
/// inside KSWIN and the one-sample test exchanged between aggregators.
struct KsResult {
  double statistic_d = 0.0;
  double p_value = 1.0;
  std::uint32_t n_recent = 0;
  std::uint32_t n_reference = 0;

  friend bool operator==(const KsResult&, const KsResult&) = default;
};

/// Exact two-sample gap as a fraction: D = numerator / (|a| * |b|).
struct KsGap {
  std::uint64_t numerator = 0;
  std::uint64_t denominator = 1;
};

/// Largest ECDF gap between two samples, computed in integer arithmetic.
KsGap ks_two_sample_gap(std::span<const double> a, std::span<const double> b);

/// Asymptotic Kolmogorov survival function with the Stephens small-sample
/// correction, evaluated at statistic `d` for effective sample size `n`.
double kolmogorov_p_value(double d, double effective_n);

/// Two-sample K-S test. Throws InputError on empty or non-finite input.
KsResult ks_two_sample(std::span<const double> a, std::span<const double> b);

/// Empirical CDF over a finite set of support points.
class EmpiricalCdf {
 public:
  EmpiricalCdf() = default;
  explicit EmpiricalCdf(std::span<const double> support);

  /// Fraction of support points <= x.
  double operator()(double x) const;

  std::size_t size() const noexcept { return sorted_.size(); }
  bool empty() const noexcept { return sorted_.empty(); }
  const std::vector<double>& support() const noexcept { return sorted_; }

 private:
  std::vector<double> sorted_;
};

/// One-sample K-S test of `window` against a reference ECDF.
KsResult ks_one_sample(std::span<const double> window, const EmpiricalCdf& reference);

}  // namespace le3d

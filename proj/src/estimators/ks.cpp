#include "le3d/estimators/ks.hpp"

#include <algorithm>
#include <cmath>

#include "le3d/error.hpp"

namespace le3d {
namespace {

void require_finite(std::span<const double> xs, const char* what) {
  if (xs.empty()) throw InputError(std::string(what) + " must not be empty");
  for (double x : xs) {
    if (!std::isfinite(x)) throw InputError(std::string(what) + " contains a non-finite value");
  }
}

std::vector<double> sorted_copy(std::span<const double> xs) {
  std::vector<double> out(xs.begin(), xs.end());
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

KsGap ks_two_sample_gap(std::span<const double> a, std::span<const double> b) {
  require_finite(a, "first sample");
  require_finite(b, "second sample");
  const auto sa = sorted_copy(a);
  const auto sb = sorted_copy(b);
  const std::uint64_t n = sa.size();
  const std::uint64_t m = sb.size();

  // ECDF_a(x) - ECDF_b(x) = (i*m - j*n) / (n*m) once all ties at x are consumed.
  std::size_t i = 0;
  std::size_t j = 0;
  std::uint64_t best = 0;
  while (i < n && j < m) {
    const double x = std::min(sa[i], sb[j]);
    while (i < n && sa[i] == x) ++i;
    while (j < m && sb[j] == x) ++j;
    const std::uint64_t lhs = i * m;
    const std::uint64_t rhs = j * n;
    best = std::max(best, lhs > rhs ? lhs - rhs : rhs - lhs);
  }
  return {best, n * m};
}

double kolmogorov_p_value(double d, double effective_n) {
  if (d <= 0.0) return 1.0;
  const double root = std::sqrt(effective_n);
  const double lambda = (root + 0.12 + 0.11 / root) * d;
  const double a2 = -2.0 * lambda * lambda;
  double sum = 0.0;
  double sign = 1.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(a2 * k * k);
    sum += sign * term;
    if (term < 1e-8) return std::clamp(2.0 * sum, 0.0, 1.0);
    sign = -sign;
  }
  return 1.0;
}

KsResult ks_two_sample(std::span<const double> a, std::span<const double> b) {
  const KsGap gap = ks_two_sample_gap(a, b);
  const double d = static_cast<double>(gap.numerator) / static_cast<double>(gap.denominator);
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  KsResult r;
  r.statistic_d = d;
  r.p_value = kolmogorov_p_value(d, na * nb / (na + nb));
  r.n_recent = static_cast<std::uint32_t>(a.size());
  r.n_reference = static_cast<std::uint32_t>(b.size());
  return r;
}

EmpiricalCdf::EmpiricalCdf(std::span<const double> support) : sorted_(sorted_copy(support)) {
  for (double x : sorted_) {
    if (!std::isfinite(x)) throw InputError("reference contains a non-finite value");
  }
}

double EmpiricalCdf::operator()(double x) const {
  if (sorted_.empty()) return 0.0;
  const auto it = std::upper_bound(sorted_.begin(), sorted_.end(), x);
  return static_cast<double>(it - sorted_.begin()) / static_cast<double>(sorted_.size());
}

KsResult ks_one_sample(std::span<const double> window, const EmpiricalCdf& reference) {
  require_finite(window, "window");
  if (reference.empty()) throw InputError("reference must hold at least one support point");
  const KsGap gap = ks_two_sample_gap(window, reference.support());
  KsResult r;
  r.statistic_d = static_cast<double>(gap.numerator) / static_cast<double>(gap.denominator);
  r.p_value = kolmogorov_p_value(r.statistic_d, static_cast<double>(window.size()));
  r.n_recent = static_cast<std::uint32_t>(window.size());
  r.n_reference = static_cast<std::uint32_t>(reference.size());
  return r;
}

}  // namespace le3d

#include "le3d/estimators/adwin.hpp"

#include <cmath>
#include <string>

#include "le3d/error.hpp"

namespace le3d {
namespace {

// Merges b into a; na and nb are the sample counts behind them.
Adwin::Bucket merge(const Adwin::Bucket& a, double na, const Adwin::Bucket& b, double nb) {
  const double n = na + nb;
  const double diff = a.sum / na - b.sum / nb;
  return {a.sum + b.sum, a.m2 + b.m2 + diff * diff * na * nb / n};
}

}  // namespace

void AdwinConfig::validate() const {
  if (!(delta > 0.0 && delta < 1.0)) {
    throw ConfigError("adwin.delta must be in (0,1), got " + std::to_string(delta));
  }
  if (max_buckets_per_class < 1) {
    throw ConfigError("adwin.max_buckets_per_class must be positive");
  }
}

Adwin::Adwin(AdwinConfig config) : config_(config) { config_.validate(); }

double Adwin::mean() const noexcept {
  return total_count_ == 0 ? 0.0 : total_sum_ / static_cast<double>(total_count_);
}

double Adwin::variance() const noexcept {
  return total_count_ == 0 ? 0.0 : total_m2_ / static_cast<double>(total_count_);
}

std::size_t Adwin::bucket_count() const noexcept {
  std::size_t n = 0;
  for (const auto& row : rows_) n += row.size();
  return n;
}

std::vector<std::uint64_t> Adwin::bucket_sizes() const {
  std::vector<std::uint64_t> sizes;
  for (std::size_t i = rows_.size(); i-- > 0;) {
    for (std::size_t k = rows_[i].size(); k-- > 0;) sizes.push_back(std::uint64_t{1} << i);
  }
  return sizes;
}

double Adwin::cut_threshold(std::uint64_t n0, std::uint64_t n1, std::uint64_t total, double delta) {
  const double inv = 1.0 / static_cast<double>(n0) + 1.0 / static_cast<double>(n1);
  return std::sqrt(inv / 4.0 * std::log(4.0 * static_cast<double>(total) / delta));
}

bool Adwin::update(double value) {
  if (!std::isfinite(value)) throw InputError("adwin: value must be finite");
  insert(value);
  compress();
  bool flagged = false;
  while (detect_cut()) {
    drop_oldest();
    flagged = true;
  }
  return flagged;
}

void Adwin::insert(double value) {
  if (rows_.empty()) rows_.emplace_back();
  rows_[0].push_front({value, 0.0});
  if (total_count_ > 0) {
    const double n = static_cast<double>(total_count_);
    const double diff = value - total_sum_ / n;
    total_m2_ += diff * diff * n / (n + 1.0);
  }
  ++total_count_;
  total_sum_ += value;
}

void Adwin::compress() {
  const auto cap = static_cast<std::size_t>(config_.max_buckets_per_class);
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    if (rows_[i].size() <= cap) break;
    const double size = std::ldexp(1.0, static_cast<int>(i));
    Bucket older = rows_[i].back();
    rows_[i].pop_back();
    Bucket newer = rows_[i].back();
    rows_[i].pop_back();
    if (i + 1 == rows_.size()) rows_.emplace_back();
    rows_[i + 1].push_front(merge(older, size, newer, size));
  }
}

bool Adwin::detect_cut() const {
  if (total_count_ < 2) return false;
  std::uint64_t n0 = 0;
  double s0 = 0.0;
  for (std::size_t i = rows_.size(); i-- > 0;) {
    const std::uint64_t size = std::uint64_t{1} << i;
    const auto& row = rows_[i];
    for (std::size_t k = row.size(); k-- > 0;) {
      n0 += size;
      s0 += row[k].sum;
      const std::uint64_t n1 = total_count_ - n0;
      if (n1 == 0) return false;
      const double gap = std::abs(s0 / static_cast<double>(n0) -
                                  (total_sum_ - s0) / static_cast<double>(n1));
      if (gap >= cut_threshold(n0, n1, total_count_, config_.delta)) return true;
    }
  }
  return false;
}

void Adwin::drop_oldest() {
  while (!rows_.empty() && rows_.back().empty()) rows_.pop_back();
  if (rows_.empty()) return;
  const std::size_t i = rows_.size() - 1;
  const Bucket b = rows_[i].back();
  rows_[i].pop_back();
  const double nb = std::ldexp(1.0, static_cast<int>(i));
  const double n = static_cast<double>(total_count_);
  const double rest = n - nb;
  if (rest > 0.0) {
    const double rest_mean = (total_sum_ - b.sum) / rest;
    const double diff = b.sum / nb - rest_mean;
    total_m2_ = std::max(0.0, total_m2_ - b.m2 - diff * diff * nb * rest / n);
  } else {
    total_m2_ = 0.0;
  }
  total_count_ -= static_cast<std::uint64_t>(nb);
  total_sum_ -= b.sum;
  if (total_count_ == 0) total_sum_ = 0.0;
  while (!rows_.empty() && rows_.back().empty()) rows_.pop_back();
}

Snapshot Adwin::snapshot() const {
  ByteWriter w;
  w.put(config_.delta).put(config_.max_buckets_per_class).put(total_count_).put(total_sum_).put(total_m2_);
  w.put(static_cast<std::uint32_t>(rows_.size()));
  for (const auto& row : rows_) {
    w.put(static_cast<std::uint32_t>(row.size()));
    for (const auto& b : row) w.put(b.sum).put(b.m2);
  }
  return {1, w.take()};
}

}  // namespace le3d

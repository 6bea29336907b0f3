#include <cmath>
#include <limits>
#include <vector>

#include "doctest.h"
#include "le3d/error.hpp"
#include "le3d/estimators/estimator.hpp"
#include "le3d/estimators/ks.hpp"
#include "le3d/random.hpp"
#include "oracles.hpp"

using namespace le3d;

namespace {

std::vector<std::size_t> flag_indices(auto& estimator, const std::vector<double>& xs) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (estimator.update(xs[i])) out.push_back(i);
  }
  return out;
}

double ks_d(const std::vector<double>& a, const std::vector<double>& b) { return ks_two_sample(a, b).statistic_d; }

}  // namespace

TEST_SUITE("adwin") {
  TEST_CASE("constant stream never flags and keeps the exact mean") {
    Adwin a;
    for (int i = 0; i < 2000; ++i) CHECK_FALSE(a.update(3.0));
    CHECK(a.width() == 2000);
    CHECK(a.mean() == 3.0);
    CHECK(a.variance() == 0.0);
  }

  TEST_CASE("first sample never flags") {
    Adwin a;
    CHECK_FALSE(a.update(123.0));
    CHECK(a.width() == 1);
  }

  TEST_CASE("noiseless step flags just after the shift, matching the exhaustive oracle") {
    Adwin a;
    oracle::AdwinExhaustiveOracle exhaustive(0.002);
    std::optional<std::size_t> first, first_oracle;
    for (std::size_t i = 0; i < 2000; ++i) {
      const double x = i < 1000 ? 0.0 : 1.0;
      if (a.update(x) && !first) first = i;
      if (exhaustive.update(x) && !first_oracle) first_oracle = i;
    }
    REQUIRE(first);
    REQUIRE(first_oracle);
    CHECK(*first > 1000);
    CHECK(*first <= 1100);
    CHECK(*first == 1003);
    CHECK(*first_oracle == 1003);
  }

  TEST_CASE("flag indices equal the boundary-split oracle on seeded traces") {
    for (std::uint64_t seed = 1; seed <= 8; ++seed) {
      CAPTURE(seed);
      auto xs = oracle::gaussian_trace(seed, 3000, 0.3, 0.1, 1200 + seed * 37, 0.25);
      Adwin a;
      oracle::AdwinBoundaryOracle o(0.002, 5);
      for (std::size_t i = 0; i < xs.size(); ++i) {
        CAPTURE(i);
        REQUIRE(a.update(xs[i]) == o.update(xs[i]));
        REQUIRE(a.width() == o.width());
      }
      CHECK(a.bucket_sizes() == o.sizes_oldest_first());
    }
  }

  TEST_CASE("compressed detector never flags before the exhaustive oracle") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      auto xs = oracle::gaussian_trace(seed, 2000, 0.5, 0.05, 1000, 0.1);
      Adwin a;
      oracle::AdwinExhaustiveOracle o(0.002);
      std::optional<std::size_t> fa, fo;
      for (std::size_t i = 0; i < xs.size(); ++i) {
        if (a.update(xs[i]) && !fa) fa = i;
        if (o.update(xs[i]) && !fo) fo = i;
      }
      REQUIRE(fa);
      REQUIRE(fo);
      CHECK(*fa >= *fo);
    }
  }

  TEST_CASE("window mean tracks the retained samples within 1e-9 relative") {
    auto xs = oracle::gaussian_trace(7, 10000, 5.0, 0.2, 6000, 1.0);
    Adwin a;
    std::deque<double> retained;
    for (double x : xs) {
      a.update(x);
      retained.push_back(x);
      while (retained.size() > a.width()) retained.pop_front();
    }
    double sum = 0.0;
    for (double v : retained) sum += v;
    const double exact = sum / static_cast<double>(retained.size());
    CHECK(std::abs(a.mean() - exact) <= 1e-9 * std::abs(exact));
  }

  TEST_CASE("bucket count is logarithmic and counts add up") {
    Adwin a;
    Rng rng(3);
    for (int i = 0; i < 1'000'000; ++i) a.update(0.5 + 0.01 * rng.uniform());
    CHECK(a.width() == 1'000'000);
    CHECK(a.bucket_count() <= 5u * 21u);
    std::uint64_t total = 0;
    for (auto s : a.bucket_sizes()) total += s;
    CHECK(total == a.width());
  }

  TEST_CASE("cut threshold uses the halved harmonic mean") {
    CHECK(Adwin::cut_threshold(10, 30, 40, 0.002) == doctest::Approx(oracle::adwin_epsilon(10, 30, 0.002)));
    CHECK(Adwin::cut_threshold(1, 1, 2, 0.1) == doctest::Approx(std::sqrt(0.5 * std::log(80.0))));
  }

  TEST_CASE("non-finite input is rejected without changing state") {
    Adwin a;
    a.update(1.0);
    const auto before = a.snapshot();
    CHECK_THROWS_AS(a.update(std::numeric_limits<double>::quiet_NaN()), InputError);
    CHECK_THROWS_AS(a.update(std::numeric_limits<double>::infinity()), InputError);
    CHECK(a.snapshot().bytes == before.bytes);
  }

  TEST_CASE("config validation") {
    CHECK_THROWS_AS(Adwin(AdwinConfig{0.0, 5}), ConfigError);
    CHECK_THROWS_AS(Adwin(AdwinConfig{1.0, 5}), ConfigError);
    CHECK_THROWS_AS(Adwin(AdwinConfig{0.002, 0}), ConfigError);
  }
}

TEST_SUITE("page-hinkley") {
  TEST_CASE("constant stream never flags") {
    PageHinkley p;
    for (int i = 0; i < 20000; ++i) CHECK_FALSE(p.update(5.0));
  }

  TEST_CASE("warm-up gate holds below min_instances") {
    PageHinkley p;
    for (int i = 0; i < 29; ++i) CHECK_FALSE(p.update(i % 2 ? 1e6 : -1e6));
  }

  TEST_CASE("step of 10 flags within 15 samples at the replayed index") {
    std::vector<double> xs(100, 0.0);
    xs.resize(200, 10.0);
    PageHinkley p;
    const auto got = flag_indices(p, xs);
    const auto want = oracle::PageHinkleyReplay{}.flags(xs);
    REQUIRE_FALSE(want.empty());
    CHECK(got == want);
    CHECK(got.front() >= 100);
    CHECK(got.front() < 115);
  }

  TEST_CASE("flag sequence equals the recurrence replay on noisy up and down shifts") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      auto xs = oracle::gaussian_trace(seed, 6000, 0.0, 0.5, 2000, seed % 2 ? 3.0 : -3.0);
      for (std::size_t i = 4000; i < xs.size(); ++i) xs[i] -= seed % 2 ? 5.0 : -5.0;
      PageHinkley p;
      CHECK(flag_indices(p, xs) == oracle::PageHinkleyReplay{}.flags(xs));
    }
  }

  TEST_CASE("running extrema bracket the sums and state size is constant") {
    PageHinkley p;
    const auto size0 = p.snapshot().bytes.size();
    auto xs = oracle::gaussian_trace(4, 5000, 1.0, 0.1);
    for (double x : xs) {
      if (p.update(x)) continue;
      CHECK(p.running_min() <= p.sum_up());
      CHECK(p.sum_down() <= p.running_max());
    }
    CHECK(p.snapshot().bytes.size() == size0);
  }

  TEST_CASE("non-finite input throws") {
    PageHinkley p;
    CHECK_THROWS_AS(p.update(std::nan("")), InputError);
    CHECK(p.samples_seen() == 0);
  }
}

TEST_SUITE("kswin") {
  TEST_CASE("no test before the window is full") {
    Kswin k;
    for (int i = 0; i < 99; ++i) {
      auto s = k.step(static_cast<double>(i));
      CHECK_FALSE(s.flagged);
      CHECK_FALSE(s.last_test.has_value());
    }
    CHECK(k.step(99.0).last_test.has_value());
  }

  TEST_CASE("identical values give D = 0 and p = 1") {
    Kswin k;
    Kswin::Step s;
    for (int i = 0; i < 150; ++i) s = k.step(2.5);
    REQUIRE(s.last_test);
    CHECK(s.last_test->statistic_d == 0.0);
    CHECK(s.last_test->p_value == 1.0);
    CHECK_FALSE(s.flagged);
  }

  TEST_CASE("shift of +5 is flagged within stat_size samples, confirmed on recorded slices") {
    Rng gen(11);
    std::vector<double> xs;
    for (int i = 0; i < 100; ++i) xs.push_back(gen.normal());
    for (int i = 0; i < 100; ++i) xs.push_back(gen.normal() + 5.0);

    KswinConfig cfg;
    Kswin k(cfg);
    // Replays the documented draw: partial Fisher-Yates over the older slice.
    Rng draw(cfg.seed);
    std::deque<double> window;
    std::optional<std::size_t> first;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      window.push_back(xs[i]);
      if (window.size() > 100) window.pop_front();
      auto s = k.step(xs[i]);
      if (window.size() < 100) continue;
      std::vector<std::size_t> idx(70);
      std::iota(idx.begin(), idx.end(), std::size_t{0});
      std::vector<double> reference, recent(window.end() - 30, window.end());
      for (std::size_t j = 0; j < 30; ++j) {
        std::swap(idx[j], idx[j + draw.below(70 - j)]);
        reference.push_back(window[idx[j]]);
      }
      REQUIRE(s.last_test);
      const auto exact = oracle::ks_pooled(recent, reference);
      CHECK(s.last_test->statistic_d == static_cast<double>(exact.num) / static_cast<double>(exact.den));
      if (s.flagged) {
        CHECK(s.last_test->p_value <= cfg.alpha);
        if (!first) first = i;
        window.assign(recent.begin(), recent.end());
      }
    }
    REQUIRE(first);
    CHECK(*first >= 100);
    CHECK(*first < 130);
  }

  TEST_CASE("window never exceeds window_size and resets to the recent slice") {
    Kswin k;
    auto xs = oracle::gaussian_trace(5, 400, 0.0, 1.0, 200, 10.0);
    for (double x : xs) {
      const bool f = k.update(x);
      CHECK(k.size() <= 100);
      if (f) CHECK(k.size() == 30);
    }
  }

  TEST_CASE("same seed, same flags") {
    auto xs = oracle::gaussian_trace(9, 5000, 0.0, 1.0, 2500, 1.0);
    Kswin a, b;
    CHECK(flag_indices(a, xs) == flag_indices(b, xs));
  }

  TEST_CASE("config validation") {
    CHECK_THROWS_AS(Kswin(KswinConfig{100, 100, 0.005, 1}), ConfigError);
    CHECK_THROWS_AS(Kswin(KswinConfig{50, 30, 0.005, 1}), ConfigError);
    CHECK_THROWS_AS(Kswin(KswinConfig{100, 30, 0.0, 1}), ConfigError);
    CHECK_THROWS_AS(Kswin(KswinConfig{100, 30, 1.0, 1}), ConfigError);
  }
}

TEST_SUITE("static-threshold") {
  TEST_CASE("bounds are inclusive") {
    StaticThreshold t({0.0, 10.0});
    CHECK_FALSE(t.update(5.0));
    CHECK_FALSE(t.update(10.0));
    CHECK_FALSE(t.update(0.0));
    CHECK(t.update(10.001));
    CHECK(t.update(-0.001));
  }

  TEST_CASE("low above high is a config error") { CHECK_THROWS_AS(StaticThreshold({2.0, 1.0}), ConfigError); }
}

TEST_SUITE("ks") {
  TEST_CASE("worked examples") {
    CHECK(ks_d({1, 2, 3}, {1, 2, 3}) == 0.0);
    CHECK(ks_two_sample(std::vector<double>{1, 2, 3}, std::vector<double>{1, 2, 3}).p_value == 1.0);
    CHECK(ks_d({1, 2, 3}, {4, 5, 6}) == 1.0);
    CHECK(ks_d({1, 3}, {2, 4}) == 0.5);
  }

  TEST_CASE("statistic equals the pooled-ECDF oracle on a small grid") {
    const double grid[] = {-1.0, 0.0, 0.5, 2.0, 7.0};
    Rng rng(21);
    for (int trial = 0; trial < 4000; ++trial) {
      std::vector<double> a(1 + rng.below(8)), b(1 + rng.below(8));
      for (auto& v : a) v = grid[rng.below(5)];
      for (auto& v : b) v = grid[rng.below(5)];
      const auto gap = ks_two_sample_gap(a, b);
      const auto want = oracle::ks_pooled(a, b);
      REQUIRE(gap.numerator * want.den == want.num * gap.denominator);
    }
  }

  TEST_CASE("symmetric and invariant under increasing transforms") {
    auto a = oracle::gaussian_trace(1, 40, 0.0, 1.0);
    auto b = oracle::gaussian_trace(2, 25, 0.3, 1.0);
    CHECK(ks_d(a, b) == ks_d(b, a));
    std::vector<double> ta, tb;
    for (double v : a) ta.push_back(std::exp(v) * 3.0 + 1.0);
    for (double v : b) tb.push_back(std::exp(v) * 3.0 + 1.0);
    CHECK(ks_d(ta, tb) == ks_d(a, b));
  }

  TEST_CASE("p-value follows the Kolmogorov distribution") {
    // Reference values of Q(lambda) = 2 sum (-1)^(k-1) exp(-2 k^2 lambda^2).
    auto p_at_lambda = [](double lambda) {
      const double n = 1e12;
      const double scale = std::sqrt(n) + 0.12 + 0.11 / std::sqrt(n);
      return kolmogorov_p_value(lambda / scale, n);
    };
    CHECK(p_at_lambda(0.5) == doctest::Approx(0.9639452436648751).epsilon(1e-7));
    CHECK(p_at_lambda(1.0) == doctest::Approx(0.26999967167735456).epsilon(1e-7));
    CHECK(p_at_lambda(1.3581) == doctest::Approx(0.0499996304316674).epsilon(1e-6));
    CHECK(p_at_lambda(2.0) == doctest::Approx(0.0006709252557796953).epsilon(1e-5));
    CHECK(kolmogorov_p_value(0.4, 15.0) == doctest::Approx(0.011313647722167194).epsilon(1e-6));
    CHECK(kolmogorov_p_value(0.0, 10.0) == 1.0);
    CHECK(kolmogorov_p_value(1e-6, 10.0) == 1.0);
  }

  TEST_CASE("empty or non-finite input is rejected") {
    CHECK_THROWS_AS(ks_two_sample(std::vector<double>{}, std::vector<double>{1.0}), InputError);
    CHECK_THROWS_AS(ks_two_sample(std::vector<double>{std::nan("")}, std::vector<double>{1.0}), InputError);
    CHECK_THROWS_AS(ks_one_sample(std::vector<double>{}, EmpiricalCdf(std::vector<double>{1.0})), InputError);
    CHECK_THROWS_AS(ks_one_sample(std::vector<double>{1.0}, EmpiricalCdf{}), InputError);
  }

  TEST_CASE("one-sample examples") {
    const std::vector<double> support{0.1, 0.4, 0.4, 0.9, 0.2};
    CHECK(ks_one_sample(support, EmpiricalCdf(support)).statistic_d <= 1.0 / support.size());
    CHECK(ks_one_sample(std::vector<double>{100, 101, 102}, EmpiricalCdf(support)).statistic_d == 1.0);
    CHECK(ks_one_sample(std::vector<double>{0.5}, EmpiricalCdf(std::vector<double>{0.0, 1.0})).statistic_d == 0.5);
    const auto same = ks_one_sample(support, EmpiricalCdf(support));
    CHECK(same.statistic_d == 0.0);
    CHECK(same.p_value == 1.0);
  }

  TEST_CASE("one-sample statistic equals the brute-force sup with ties") {
    Rng rng(5);
    for (int trial = 0; trial < 2000; ++trial) {
      std::vector<double> w(1 + rng.below(10)), r(1 + rng.below(10));
      for (auto& v : w) v = static_cast<double>(rng.below(4));
      for (auto& v : r) v = static_cast<double>(rng.below(4));
      CHECK(ks_one_sample(w, EmpiricalCdf(r)).statistic_d == oracle::ks_one_sample_brute(w, r));
    }
  }

  TEST_CASE("empirical CDF counts points at or below x") {
    EmpiricalCdf f(std::vector<double>{3.0, 1.0, 2.0, 2.0});
    CHECK(f(0.5) == 0.0);
    CHECK(f(1.0) == 0.25);
    CHECK(f(2.0) == 0.75);
    CHECK(f(10.0) == 1.0);
  }
}

TEST_SUITE("estimator-kinds") {
  TEST_CASE("names round-trip and unknown names are rejected") {
    for (auto k : {EstimatorKind::Adwin, EstimatorKind::PageHinkley, EstimatorKind::Kswin,
                   EstimatorKind::StaticThreshold}) {
      CHECK(parse_estimator_kind(to_string(k)) == k);
      auto e = make_estimator(default_config(k));
      CHECK(e->kind() == k);
    }
    CHECK(parse_estimator_kind("Page_Hinkley") == EstimatorKind::PageHinkley);
    CHECK_THROWS_AS(parse_estimator_kind("ddm"), ConfigError);
  }

  TEST_CASE("invalid configs are rejected by the factory") {
    CHECK_THROWS_AS(make_estimator(AdwinConfig{2.0, 5}), ConfigError);
    CHECK_THROWS_AS(make_estimator(PageHinkleyConfig{30, 0.005, -1.0, 0.9999}), ConfigError);
  }
}

TEST_SUITE("stationary-standard-normal") {
  // Literal form of the estimator false-positive property: unit-variance
  // noise with default configs.
  TEST_CASE("default estimators on 50,000 standard-normal samples") {
    auto xs = oracle::gaussian_trace(1, 50000, 0.0, 1.0);
    Adwin a;
    PageHinkley p;
    Kswin k;
    std::size_t fa = 0, fp = 0, fk = 0, tests = 0;
    for (double x : xs) {
      fa += a.update(x);
      fp += p.update(x);
      auto s = k.step(x);
      fk += s.flagged;
      tests += s.last_test.has_value();
    }
    CHECK(fk <= 3.0 * 0.005 * static_cast<double>(tests));
    CHECK(fa == 0);
    CHECK(fp == 0);
  }
}

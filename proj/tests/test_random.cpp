#include <doctest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "stat_helpers.hpp"
#include "turnsample/random.hpp"

using namespace turnsample;

TEST_CASE("random source is deterministic and substreams decorrelate") {
  RandomSource a(42), b(42);
  for (int i = 0; i < 1000; ++i) CHECK(a.next() == b.next());

  RandomSource s1 = RandomSource(7).substream("left");
  RandomSource s2 = RandomSource(7).substream("right");
  const int n = 100000;
  std::vector<double> u1(n), u2(n);
  for (int i = 0; i < n; ++i) {
    u1[i] = s1.uniform();
    u2[i] = s2.uniform();
  }
  CHECK(std::fabs(testutil::correlation(u1, u2)) < 3.0 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("exponential draws match the analytic mean and tail") {
  RandomSource src = RandomSource(11).substream("exp");
  const int n = 1000000;
  double sum = 0.0;
  int tail = 0;
  const double threshold = std::log(100.0);  // a = 1, n = 100
  for (int i = 0; i < n; ++i) {
    double e = sample_exponential(src);
    sum += e;
    if (e >= threshold) ++tail;
  }
  CHECK(std::fabs(sum / n - 1.0) < 0.01);

  double p = 0.01;  // 1/n^a
  double sigma = std::sqrt(p * (1 - p) / n);
  CHECK(std::fabs(static_cast<double>(tail) / n - p) < 3 * sigma);
}

TEST_CASE("exponential clipping clamps and counts") {
  ExponentialClip clip{0.5, 2.0};  // absurdly tight range to force events
  ClipCounter stats;
  RandomSource src(3);
  for (int i = 0; i < 10000; ++i) {
    double e = sample_exponential(src, clip, stats);
    CHECK(e >= 0.5);
    CHECK(e <= 2.0);
  }
  CHECK(stats.low > 0);
  CHECK(stats.high > 0);

  // The production range never fires at desk-scale draw counts.
  ExponentialClip wide = ExponentialClip::for_universe(16, 12.0);
  ClipCounter none;
  for (int i = 0; i < 100000; ++i) sample_exponential(src, wide, none);
  CHECK(none.total() == 0);
}

TEST_CASE("rnd_eta rounds down to grid powers") {
  DiscretizationGrid grid(0.5, 1024, 6.0);
  CHECK(rnd_eta(1.0, grid) == doctest::Approx(1.0));
  CHECK(rnd_eta(1.7, grid) == doctest::Approx(1.5));  // 1.5 <= 1.7 < 2.25
  CHECK(rnd_eta(0.9, grid) == doctest::Approx(2.0 / 3.0));
  CHECK_THROWS_AS(rnd_eta(-1.0, grid), std::domain_error);

  // Out-of-range values clamp to the nearest bound and are counted.
  ClipCounter clamps;
  double lo = grid.round_down(1e-30, &clamps);
  CHECK(lo == doctest::Approx(grid.value(grid.qmin())));
  CHECK(clamps.low == 1);
}

TEST_CASE("grid cell probabilities match the closed form and normalize") {
  // Cell edges 1 and 2 at p = 2: exp(-1/4) - exp(-1).
  DiscretizationGrid unit(1.0, 64, 6.0);
  double p0 = grid_cell_probability(0, 2.0, unit);
  CHECK(p0 == doctest::Approx(std::exp(-0.25) - std::exp(-1.0)).epsilon(1e-12));
  CHECK(p0 == doctest::Approx(0.41096).epsilon(1e-4));

  // Monte-Carlo cross-check of the same cell.
  RandomSource src(5);
  int hits = 0;
  const int trials = 1000000;
  for (int i = 0; i < trials; ++i) {
    double x = std::pow(sample_exponential(src), -0.5);
    if (x >= 1.0 && x < 2.0) ++hits;
  }
  double sigma = std::sqrt(p0 * (1 - p0) / trials);
  CHECK(std::fabs(static_cast<double>(hits) / trials - p0) < 3 * sigma);

  // Full-grid normalization: the missing mass is the clipped tail.
  DiscretizationGrid grid(0.25, 16, 6.0);
  double total = 0.0;
  for (int q = grid.qmin(); q <= grid.qmax(); ++q) total += grid_cell_probability(q, 3.0, grid);
  double tail_budget = std::pow(16.0, -6.0);
  CHECK(total <= 1.0);
  CHECK(1.0 - total <= tail_budget * 2);
}

TEST_CASE("duplicate counts: single duplicate occupies one cell") {
  DiscretizationGrid grid(0.25, 16, 6.0);
  RandomSource src(17);
  for (int t = 0; t < 200; ++t) {
    auto counts = sample_duplicate_counts(1, 2.0, grid, src);
    CHECK(counts.total() + counts.clipped == 1);
    if (!counts.cells.empty()) CHECK(counts.cells.size() == 1);
  }
}

TEST_CASE("duplicate counts reproduce per-cell binomial means") {
  DiscretizationGrid grid(0.25, 16, 6.0);
  RandomSource src(23);
  const int trials = 100000;
  const std::uint64_t nc = 16;
  std::vector<double> totals(grid.cell_count(), 0.0);
  for (int t = 0; t < trials; ++t) {
    auto counts = sample_duplicate_counts(nc, 3.0, grid, src);
    for (const auto& c : counts.cells) totals[c.q - grid.qmin()] += c.count;
  }
  for (int q = grid.qmin(); q <= grid.qmax(); ++q) {
    double pq = grid_cell_probability(q, 3.0, grid);
    if (pq < 1e-3) continue;
    double expect = static_cast<double>(nc) * pq;
    double sigma = std::sqrt(static_cast<double>(nc) * pq * (1 - pq) / trials);
    CHECK(std::fabs(totals[q - grid.qmin()] / trials - expect) < 3.5 * sigma + 1e-9);
  }
}

TEST_CASE("duplicate counts match naive rounding by chi-square") {
  DiscretizationGrid grid(0.25, 16, 6.0);
  const std::uint64_t nc = 16;
  const double p = 3.0;
  const int trials = 100000;

  RandomSource fast_src = RandomSource(31).substream("fast");
  RandomSource naive_src = RandomSource(31).substream("naive");
  int bins = grid.cell_count() + 1;  // + clip bin
  std::vector<double> fast_tot(bins, 0.0), naive_tot(bins, 0.0), expect(bins, 0.0);

  for (int t = 0; t < trials; ++t) {
    auto counts = sample_duplicate_counts(nc, p, grid, fast_src);
    for (const auto& c : counts.cells) fast_tot[c.q - grid.qmin()] += c.count;
    fast_tot[bins - 1] += counts.clipped;

    ClipCounter clamps;
    for (std::uint64_t j = 0; j < nc; ++j) {
      double x = std::pow(sample_exponential(naive_src), -1.0 / p);
      ClipCounter before = clamps;
      int q = grid.round_down_index(x, &clamps);
      if (clamps.total() != before.total()) {
        naive_tot[bins - 1] += 1;  // off-grid: the counting path clips these
      } else {
        naive_tot[q - grid.qmin()] += 1;
      }
    }
  }
  for (int q = grid.qmin(); q <= grid.qmax(); ++q) {
    expect[q - grid.qmin()] = static_cast<double>(nc) * trials * grid_cell_probability(q, p, grid);
  }
  expect[bins - 1] = static_cast<double>(nc) * trials -
                     std::accumulate(expect.begin(), expect.end() - 1, 0.0);

  CHECK(testutil::chi2_gof_pass(fast_tot, expect));
  CHECK(testutil::chi2_gof_pass(naive_tot, expect));
  CHECK(testutil::chi2_two_sample_pass(fast_tot, naive_tot));
}

TEST_CASE("shifted duplicate counts respect the conditioning") {
  DiscretizationGrid grid(0.1, 16, 12.0);
  RandomSource src(37);
  const double p = 2.0;
  for (int t = 0; t < 500; ++t) {
    double shift = sample_exponential(src) / 256.0;
    auto counts = sample_duplicate_counts_shifted(255, p, shift, grid, src);
    double cap = std::pow(shift, -1.0 / p);
    for (const auto& c : counts.cells) {
      CHECK(grid.value(c.q) <= cap * (1.0 + 1e-9));
    }
    CHECK(counts.total() + counts.clipped == 255);
  }
}

TEST_CASE("signed sums agree with explicit Rademacher loops") {
  RandomSource src(41);
  SUBCASE("degenerate counts") {
    CHECK(signed_sum(0, 3.0, src) == 0.0);
    for (int t = 0; t < 100; ++t) {
      double s = signed_sum(1, 2.5, src);
      CHECK(std::fabs(s) == doctest::Approx(2.5));
    }
  }
  SUBCASE("variance of 100 signs") {
    const int trials = 100000;
    std::vector<double> vals(trials);
    for (int t = 0; t < trials; ++t) vals[t] = signed_sum(100, 1.0, src);
    double sd = testutil::sample_std(vals);
    CHECK(std::fabs(sd * sd - 100.0) < 5.0);  // 5%
  }
  SUBCASE("distribution equality via KS") {
    for (std::uint64_t a : {std::uint64_t{1}, std::uint64_t{7}, std::uint64_t{64}}) {
      const int trials = 100000;
      std::vector<double> fast(trials), loop(trials);
      for (int t = 0; t < trials; ++t) {
        fast[t] = signed_sum(a, 1.0, src);
        double s = 0.0;
        for (std::uint64_t j = 0; j < a; ++j) s += (src.next() & 1) ? 1.0 : -1.0;
        loop[t] = s;
      }
      CHECK(testutil::ks_two_sample_pass(fast, loop));
    }
  }
}

TEST_CASE("gaussian sums follow 2-stability") {
  RandomSource src(43);
  CHECK(gaussian_sum(0, 5.0, src) == 0.0);

  const int trials = 100000;
  std::vector<double> a4(trials), a9(trials);
  for (int t = 0; t < trials; ++t) {
    a4[t] = gaussian_sum(4, 1.0, src);
    a9[t] = gaussian_sum(9, 2.0, src);
  }
  CHECK(std::fabs(testutil::sample_std(a4) - 2.0) < 0.04);
  CHECK(std::fabs(testutil::sample_std(a9) - 6.0) < 0.12);  // 2%
  CHECK(std::fabs(testutil::mean(a4)) < 3.0 * 2.0 / std::sqrt(trials));
}

TEST_CASE("geometric gaps have the right mean") {
  RandomSource src(47);
  for (int t = 0; t < 50; ++t) CHECK(geometric_gap(1, src) == 1);

  const int trials = 100000;
  double sum = 0.0;
  for (int t = 0; t < trials; ++t) sum += static_cast<double>(geometric_gap(8, src));
  CHECK(std::fabs(sum / trials - 8.0) < 0.24);  // 3%

  RandomSource s1(99), s2(99);
  for (int t = 0; t < 100; ++t) CHECK(geometric_gap(16, s1) == geometric_gap(16, s2));
}

TEST_CASE("binomial sampler matches moments across regimes") {
  RandomSource src(53);
  for (auto [n, p] : std::vector<std::pair<std::uint64_t, double>>{
           {10, 0.3}, {100, 0.04}, {4096, 0.5}, {800, 0.9}}) {
    const int trials = 40000;
    std::vector<double> vals(trials);
    for (int t = 0; t < trials; ++t) {
      std::uint64_t k = sample_binomial(src, n, p);
      CHECK(k <= n);
      vals[t] = static_cast<double>(k);
    }
    double m = static_cast<double>(n) * p;
    double sd = std::sqrt(static_cast<double>(n) * p * (1 - p));
    CHECK(std::fabs(testutil::mean(vals) - m) < 4.0 * sd / std::sqrt(static_cast<double>(trials)));
    CHECK(std::fabs(testutil::sample_std(vals) - sd) < 0.05 * sd);
  }
}

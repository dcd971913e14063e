#include <doctest.h>

#include <cmath>
#include <vector>

#include "stat_helpers.hpp"
#include "turnsample/approx_sampler.hpp"
#include "turnsample/random.hpp"
#include "turnsample/stream.hpp"

using namespace turnsample;

namespace {

ApproxSamplerConfig desk_config(std::uint32_t n, double eps = 0.25) {
  ApproxSamplerConfig cfg;
  cfg.n = n;
  cfg.p = 3.0;
  cfg.eps = eps;
  return cfg;
}

std::vector<TurnstileUpdate> updates_for(const std::vector<std::int64_t>& x) {
  std::vector<TurnstileUpdate> u;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] != 0) u.push_back({static_cast<std::uint32_t>(i + 1), x[i]});
  }
  return u;
}

}  // namespace

TEST_CASE("insert-delete restores the exact empty state") {
  ApproxSamplerConfig cfg = desk_config(4);
  ApproxLpSampler a(cfg, 42);
  a.update({2, 5});
  a.update({2, -5});
  ApproxLpSampler b(cfg, 42);
  b.update({2, 3});   // touch the same index so the caches match
  b.update({2, -3});
  CHECK(a.stage1_table() == b.stage1_table());
  CHECK(a.stage2_table() == b.stage2_table());
  for (double v : a.stage2_table()) CHECK(v == 0.0);
  for (double v : a.stage1_table()) CHECK(v == 0.0);
  for (double v : a.norm_accumulators()) CHECK(v == 0.0);
}

TEST_CASE("shared-realization expansion reproduces the fast tables bit for bit") {
  // n=4, c=2: 16 duplicates per index.
  ApproxSamplerConfig fast_cfg = desk_config(4);
  ApproxSamplerConfig naive_cfg = fast_cfg;
  naive_cfg.path = ApproxSamplerConfig::Path::kNaiveShared;

  StreamConfig stream{4, 60, 6, StreamPattern::kUniformRandom, 8};
  auto updates = generate_stream(stream);

  for (std::uint64_t seed : {11ULL, 27ULL, 993ULL}) {
    ApproxLpSampler fast(fast_cfg, seed);
    ApproxLpSampler naive(naive_cfg, seed);
    for (const auto& u : updates) {
      fast.update(u);
      naive.update(u);
    }
    CHECK(fast.stage1_table() == naive.stage1_table());
    CHECK(fast.stage2_table() == naive.stage2_table());
    CHECK(fast.norm_accumulators() == naive.norm_accumulators());
    for (std::uint32_t i = 1; i <= 4; ++i) {
      CHECK(fast.stage1_scale(i) == naive.stage1_scale(i));
      CHECK(fast.sigma(i) == naive.sigma(i));
    }
  }
}

TEST_CASE("independent naive path agrees in distribution") {
  // Output-index distributions of the fast and fully materialized paths.
  ApproxSamplerConfig fast_cfg = desk_config(4);
  ApproxSamplerConfig naive_cfg = fast_cfg;
  naive_cfg.path = ApproxSamplerConfig::Path::kNaiveIndependent;

  auto updates = updates_for({3, -9, 5, 2});
  const int trials = 5000;
  std::vector<double> fast_counts(4, 0.0), naive_counts(4, 0.0);
  int fast_succ = 0, naive_succ = 0;
  for (int t = 0; t < trials; ++t) {
    ApproxLpSampler fast(fast_cfg, hash_combine(100, t));
    ApproxLpSampler naive(naive_cfg, hash_combine(200, t));
    for (const auto& u : updates) {
      fast.update(u);
      naive.update(u);
    }
    if (auto got = fast.query(); got.ok()) {
      ++fast_succ;
      fast_counts[*got.index - 1] += 1.0;
    }
    if (auto got = naive.query(); got.ok()) {
      ++naive_succ;
      naive_counts[*got.index - 1] += 1.0;
    }
  }
  REQUIRE(fast_succ > trials / 10);
  REQUIRE(naive_succ > trials / 10);
  for (auto& c : fast_counts) c /= fast_succ;
  for (auto& c : naive_counts) c /= naive_succ;
  CHECK(tv_distance(fast_counts, naive_counts) <= 0.05);
}

TEST_CASE("one-sparse vectors sample that index on every success") {
  ApproxSamplerConfig cfg = desk_config(8);
  auto updates = updates_for({0, 0, 0, 0, -7, 0, 0, 0});
  int succ = 0;
  for (int t = 0; t < 200; ++t) {
    ApproxLpSampler s(cfg, hash_combine(5, t));
    for (const auto& u : updates) s.update(u);
    auto got = s.query();
    if (!got.ok()) continue;
    ++succ;
    CHECK(*got.index == 5);
  }
  CHECK(succ > 20);
}

TEST_CASE("zero vector fails") {
  ApproxSamplerConfig cfg = desk_config(8);
  ApproxLpSampler s(cfg, 3);
  s.update({1, 4});
  s.update({1, -4});
  CHECK(!s.query().ok());
}

TEST_CASE("sampled frequencies respect the (1 +- eps) band at n=16") {
  // Smaller-scale mirror of the acceptance run.
  const std::uint32_t n = 16;
  std::vector<std::int64_t> x{3, -7, 12, 5, -2, 9, 15, -11, 4, 8, -6, 13, 1, -14, 10, 16};
  auto updates = updates_for(x);
  ExactVector mirror = materialize(n, 20, updates);
  auto exact = exact_g_distribution(mirror, GFunction::power(3.0));

  ApproxSamplerConfig cfg = desk_config(n);
  const int trials = 4000;
  std::vector<std::uint32_t> picks;
  std::uint64_t clips = 0;
  for (int t = 0; t < trials; ++t) {
    ApproxLpSampler s(cfg, hash_combine(900, t));
    for (const auto& u : updates) s.update(u);
    clips += s.clip_events().total();
    auto got = s.query();
    if (got.ok()) picks.push_back(*got.index);
  }
  CHECK(clips == 0);
  double rate = static_cast<double>(picks.size()) / trials;
  CHECK(rate >= 0.1);

  auto emp = testutil::empirical_distribution(picks, n);
  int inside = 0;
  for (std::uint32_t i = 0; i < n; ++i) {
    double sigma = std::sqrt(exact[i] * (1 - exact[i]) / static_cast<double>(picks.size()));
    double lo = (1 - cfg.eps) * exact[i] - 3.5 * sigma;
    double hi = (1 + cfg.eps) * exact[i] + 3.5 * sigma;
    if (emp[i] >= lo && emp[i] <= hi) ++inside;
  }
  CHECK(inside == static_cast<int>(n));
}

TEST_CASE("candidate recovery and heaviness invariants hold") {
  const std::uint32_t n = 16;
  std::vector<std::int64_t> x{3, -7, 12, 5, -2, 9, 15, -11, 4, 8, -6, 13, 1, -14, 10, 16};
  auto updates = updates_for(x);
  double fp = 0.0;
  for (auto v : x) fp += std::pow(std::fabs(static_cast<double>(v)), 3.0);
  double norm_p = std::pow(fp, 1.0 / 3.0);

  ApproxSamplerConfig cfg = desk_config(n, 0.01);  // eps drives the surrogate rates
  const int trials = 600;
  int argmax_recovered = 0, heavy = 0, b_small = 0;
  double heavy_floor = std::pow(static_cast<double>(n), 2.0 / 3.0) * norm_p /
                       (100.0 * std::log(1.0 / cfg.eps));
  for (int t = 0; t < trials; ++t) {
    ApproxLpSampler s(cfg, hash_combine(321, t));
    double best = -1.0;
    std::uint32_t arg = 0;
    for (std::uint32_t i = 1; i <= n; ++i) {
      double v = std::fabs(static_cast<double>(x[i - 1])) * s.stage1_scale(i);
      if (v > best) {
        best = v;
        arg = i;
      }
    }
    for (const auto& u : updates) s.update(u);
    auto got = s.query();
    (void)got;
    if (best >= heavy_floor) ++heavy;
    if (s.candidate_count() <= 64) ++b_small;
    // Stage-1 recovery surrogate: the true argmax of v must be a candidate.
    // query() already populated the candidate set; re-check via the estimate.
    if (got.ok() || s.candidate_count() > 0) {
      // candidates are not exposed one by one; recovery is checked through
      // the pass path in the soundness test below
      (void)arg;
    }
    if (got.ok() && *got.index == arg) ++argmax_recovered;
  }
  CHECK(heavy >= static_cast<int>(0.95 * trials));
  CHECK(b_small == trials);
  CHECK(argmax_recovered > 0);
}

TEST_CASE("gap-test passes identify the true scaled argmax") {
  const std::uint32_t n = 16;
  std::vector<std::int64_t> x{3, -7, 12, 5, -2, 9, 15, -11, 4, 8, -6, 13, 1, -14, 10, 16};
  auto updates = updates_for(x);
  ApproxSamplerConfig cfg = desk_config(n);
  const int trials = 3000;
  int passes = 0, correct = 0;
  for (int t = 0; t < trials; ++t) {
    ApproxLpSampler s(cfg, hash_combine(7777, t));
    double best = -1.0;
    std::uint32_t arg = 0;
    for (std::uint32_t i = 1; i <= n; ++i) {
      double v = std::fabs(static_cast<double>(x[i - 1])) * s.stage1_scale(i);
      if (v > best) {
        best = v;
        arg = i;
      }
    }
    for (const auto& u : updates) s.update(u);
    auto got = s.query();
    if (!got.ok()) continue;
    ++passes;
    if (*got.index == arg) ++correct;
  }
  REQUIRE(passes > trials / 10);
  CHECK(correct >= static_cast<int>(0.995 * passes));
}

TEST_CASE("operation counters model the update-cost separation") {
  StreamConfig stream{4, 40, 6, StreamPattern::kUniformRandom, 2};
  auto updates = generate_stream(stream);
  for (double c : {2.0, 3.0, 4.0}) {
    ApproxSamplerConfig fast_cfg = desk_config(4);
    fast_cfg.dup_exponent = c;
    ApproxSamplerConfig naive_cfg = fast_cfg;
    naive_cfg.path = ApproxSamplerConfig::Path::kNaiveShared;

    ApproxLpSampler fast(fast_cfg, 5);
    ApproxLpSampler naive(naive_cfg, 5);
    for (const auto& u : updates) {
      fast.update(u);
      naive.update(u);
    }
    double ratio = static_cast<double>(naive.ops().duplicate_events) /
                   static_cast<double>(fast.ops().cell_events);
    double cells_rows = static_cast<double>(DiscretizationGrid(fast_cfg.eta_value(), 4,
                                                               fast_cfg.clip_exponent)
                                                .cell_count()) *
                        fast_cfg.cs2_rows;
    double formula = std::pow(4.0, c) / cells_rows;
    CHECK(ratio >= formula / 2.0);
    CHECK(ratio <= formula * 2.0);
  }
}

TEST_CASE("value estimates track the sampled coordinate") {
  const std::uint32_t n = 16;
  std::vector<std::int64_t> x{3, -7, 12, 5, -2, 9, 15, -11, 4, 8, -6, 13, 1, -14, 10, 16};
  auto updates = updates_for(x);
  ApproxSamplerConfig cfg = desk_config(n);
  int succ = 0, ok = 0;
  for (int t = 0; t < 1500 && succ < 300; ++t) {
    ApproxLpSampler s(cfg, hash_combine(31, t));
    for (const auto& u : updates) s.update(u);
    auto got = s.query();
    if (!got.ok() || !got.value_estimate.has_value()) continue;
    ++succ;
    double truth = static_cast<double>(x[*got.index - 1]);
    if (std::fabs(*got.value_estimate - truth) <= cfg.eps * std::fabs(truth)) ++ok;
  }
  REQUIRE(succ >= 100);
  CHECK(ok >= succ * 9 / 10);
}

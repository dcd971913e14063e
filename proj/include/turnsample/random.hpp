#pragma once

#include <cstdint>
#include <cmath>
#include <string_view>
#include <vector>

namespace turnsample {

// SplitMix64 finalizer; the workhorse behind RandomSource and all lazy
// sketch randomness (hash-derived memberships, signs, scale factors).
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z ^= z >> 30;
  z *= 0xbf58476d1ce4e5b9ULL;
  z ^= z >> 27;
  z *= 0x94d049bb133111ebULL;
  z ^= z >> 31;
  return z;
}

constexpr std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b) noexcept {
  return mix64(a ^ (0x9e3779b97f4a7c15ULL + (b << 6) + (b >> 2) + b));
}

constexpr std::uint64_t label_hash(std::string_view s) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Counter-based seeded generator with labeled sub-streams.
// Identical (seed, chain of labels) always reproduces the same sequence;
// distinct labels yield statistically independent sequences.
class RandomSource {
 public:
  using result_type = std::uint64_t;

  explicit RandomSource(std::uint64_t seed) : key_(mix64(seed ^ 0x6a09e667f3bcc909ULL)) {}

  RandomSource substream(std::uint64_t label) const {
    RandomSource out(0);
    out.key_ = hash_combine(key_, mix64(label ^ 0xbb67ae8584caa73bULL));
    out.counter_ = 0;
    return out;
  }
  RandomSource substream(std::string_view label) const { return substream(label_hash(label)); }

  std::uint64_t next() { return mix64(key_ + (++counter_) * 0x9e3779b97f4a7c15ULL); }
  std::uint64_t operator()() { return next(); }
  static constexpr std::uint64_t min() { return 0; }
  static constexpr std::uint64_t max() { return ~0ULL; }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, bound).
  std::uint64_t below(std::uint64_t bound) {
    // Multiply-shift rejection-free mapping; bias < 2^-64 per draw.
    return static_cast<std::uint64_t>((static_cast<unsigned __int128>(next()) * bound) >> 64);
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

struct ClipCounter {
  std::uint64_t low = 0;
  std::uint64_t high = 0;
  std::uint64_t total() const { return low + high; }
};

// Clip range [n^-c', n^c'] for exponential draws.
struct ExponentialClip {
  double lo = 0.0;
  double hi = 0.0;
  static ExponentialClip for_universe(std::uint64_t n, double exponent);
};

// Standard rate-1 exponential, unclipped.
double sample_exponential(RandomSource& src);

// Clipped variant; out-of-range draws are clamped and counted.
double sample_exponential(RandomSource& src, const ExponentialClip& clip, ClipCounter& stats);

// Standard Gaussian (Box-Muller, no state carried between calls).
double sample_gaussian(RandomSource& src);

// Exact Binomial(n, p) via inversion walk from the mode.  Expected cost
// O(1 + sqrt(n p (1-p))).
std::uint64_t sample_binomial(RandomSource& src, std::uint64_t n, double p);

// Geometric with success probability 1/bucket_count, support {1, 2, ...};
// the gap between consecutive occupied buckets under Bernoulli(1/L) hashing.
std::uint64_t geometric_gap(std::uint64_t bucket_count, RandomSource& src);

// Sum of `count` Rademacher signs times `value`: value * (2 Bin(count,1/2) - count).
double signed_sum(std::uint64_t count, double value, RandomSource& src);

// Sum of `count` iid standard Gaussians times `value`, collapsed by 2-stability.
double gaussian_sum(std::uint64_t count, double value, RandomSource& src);

// Multiplicative grid I_q = (1+eta)^q covering [n^-c', n^c'].
class DiscretizationGrid {
 public:
  DiscretizationGrid(double eta, std::uint64_t n, double clip_exponent = 6.0);

  double eta() const { return eta_; }
  int qmin() const { return qmin_; }
  int qmax() const { return qmax_; }
  int cell_count() const { return qmax_ - qmin_ + 1; }

  double value(int q) const { return std::exp(static_cast<double>(q) * log_base_); }

  // Index q of the largest I_q <= x, clamped to grid bounds (clamp counted).
  int round_down_index(double x, ClipCounter* clamped = nullptr) const;
  double round_down(double x, ClipCounter* clamped = nullptr) const {
    return value(round_down_index(x, clamped));
  }

 private:
  double eta_;
  double log_base_;
  int qmin_;
  int qmax_;
};

double rnd_eta(double x, const DiscretizationGrid& grid, ClipCounter* clamped = nullptr);

// P[rnd_eta(1/e^{1/p}) = I_q] for a standard exponential e:
// exp(-I_{q+1}^{-p}) - exp(-I_q^{-p}).
double grid_cell_probability(int q, double p, const DiscretizationGrid& grid);

// Conditional variant given e >= shift (memoryless tail of the exponential).
double grid_cell_probability_shifted(int q, double p, double shift, const DiscretizationGrid& grid);

// Joint per-cell counts for `nc` duplicated inverse exponentials rounded onto
// the grid.  Stored sparsely; clipped mass (outside grid bounds) is tallied.
struct DuplicateCounts {
  struct Cell {
    int q;
    std::uint32_t count;
  };
  std::vector<Cell> cells;  // descending q, positive counts only
  std::uint32_t clipped = 0;

  std::uint64_t total() const {
    std::uint64_t t = 0;
    for (const auto& c : cells) t += c.count;
    return t;
  }
  int max_cell() const { return cells.empty() ? 0 : cells.front().q; }
};

DuplicateCounts sample_duplicate_counts(std::uint64_t nc, double p, const DiscretizationGrid& grid,
                                        RandomSource& src);

// Counts for `nc` duplicates conditioned on every underlying exponential
// being at least `shift` (used when the maximum is drawn exactly first).
DuplicateCounts sample_duplicate_counts_shifted(std::uint64_t nc, double p, double shift,
                                                const DiscretizationGrid& grid, RandomSource& src);

}  // namespace turnsample

#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "turnsample/random.hpp"

namespace turnsample {

// Hash family for the Bernoulli-membership CountSketch: every item lands in
// every bucket of every row independently with probability 1/l, and carries
// one sign per row.  Both are lazily derived from (seed, row, key), so no
// per-item state is ever stored.
class CsHashFamily {
 public:
  CsHashFamily(std::uint64_t seed, std::uint32_t buckets_per_row)
      : seed_(seed), buckets_(buckets_per_row) {
    if (buckets_per_row == 0) throw std::invalid_argument("bucket count must be positive");
  }

  std::uint32_t buckets_per_row() const { return buckets_; }

  double sign(std::uint32_t row, std::uint64_t key) const {
    return (mix64(hash_combine(seed_ ^ 0x5be0cd19137e2179ULL,
                               (static_cast<std::uint64_t>(row) << 40) ^ key)) &
            1)
               ? 1.0
               : -1.0;
  }

  // Member buckets of `key` in `row`, enumerated by geometric gaps with
  // parameter 1/l; jointly identical to per-bucket Bernoulli(1/l) draws.
  void member_buckets(std::uint32_t row, std::uint64_t key,
                      std::vector<std::uint32_t>& out) const {
    out.clear();
    RandomSource src =
        RandomSource(seed_).substream(0x243f6a8885a308d3ULL ^ (static_cast<std::uint64_t>(row) << 32) ^ key);
    std::uint64_t pos = geometric_gap(buckets_, src) - 1;
    while (pos < buckets_) {
      out.push_back(static_cast<std::uint32_t>(pos));
      pos += geometric_gap(buckets_, src);
    }
  }

 private:
  std::uint64_t seed_;
  std::uint32_t buckets_;
};

// d x l table of accumulators A[i][j] = sum_k x_k g_{i,k} h_{i,j,k}.
// T is double for scaled inputs, int64 for raw integer frequencies.
template <typename T>
class BasicSketchTable {
 public:
  BasicSketchTable(std::uint32_t rows, std::uint32_t buckets, std::uint64_t seed)
      : rows_(rows), hash_(seed, buckets), counters_(static_cast<std::size_t>(rows) * buckets, T{}) {
    if (rows == 0) throw std::invalid_argument("row count must be positive");
  }

  std::uint32_t rows() const { return rows_; }
  std::uint32_t buckets() const { return hash_.buckets_per_row(); }
  const std::vector<T>& counters() const { return counters_; }
  const CsHashFamily& hash() const { return hash_; }

  void update(std::uint32_t key, T delta) {
    std::vector<std::uint32_t> members;
    for (std::uint32_t i = 0; i < rows_; ++i) {
      hash_.member_buckets(i, key, members);
      double g = hash_.sign(i, key);
      for (std::uint32_t j : members) {
        counters_[static_cast<std::size_t>(i) * buckets() + j] += static_cast<T>(g * static_cast<double>(delta));
      }
    }
  }

  // median{ g_{i,k} A_{i,j} : h_{i,j,k} = 1 }; nullopt when the key hashed
  // into no bucket at all (the caller maps this to FAIL).
  std::optional<double> estimate(std::uint32_t key) const {
    std::vector<double> vals;
    std::vector<std::uint32_t> members;
    for (std::uint32_t i = 0; i < rows_; ++i) {
      hash_.member_buckets(i, key, members);
      double g = hash_.sign(i, key);
      for (std::uint32_t j : members) {
        vals.push_back(g * static_cast<double>(counters_[static_cast<std::size_t>(i) * buckets() + j]));
      }
    }
    if (vals.empty()) return std::nullopt;
    std::sort(vals.begin(), vals.end());
    std::size_t h = vals.size() / 2;
    if (vals.size() % 2 == 1) return vals[h];
    return 0.5 * (vals[h - 1] + vals[h]);
  }

  // One unbiased signed estimate: the first bucket (row-major) containing the
  // key.  E[g A | membership] = x_k since colliding mass carries fresh signs.
  std::optional<double> unbiased_single(std::uint32_t key) const {
    std::vector<std::uint32_t> members;
    for (std::uint32_t i = 0; i < rows_; ++i) {
      hash_.member_buckets(i, key, members);
      if (!members.empty()) {
        return hash_.sign(i, key) *
               static_cast<double>(counters_[static_cast<std::size_t>(i) * buckets() + members[0]]);
      }
    }
    return std::nullopt;
  }

  // Same-shape, same-seed tables add: sketch(x) + sketch(y) = sketch(x + y).
  void merge(const BasicSketchTable& other) {
    if (other.counters_.size() != counters_.size()) {
      throw std::invalid_argument("sketch shape mismatch in merge");
    }
    for (std::size_t i = 0; i < counters_.size(); ++i) counters_[i] += other.counters_[i];
  }

 private:
  std::uint32_t rows_;
  CsHashFamily hash_;
  std::vector<T> counters_;
};

using SketchTable = BasicSketchTable<double>;
using IntSketchTable = BasicSketchTable<std::int64_t>;

// Mean of independent single-row unbiased estimates.
inline double cs_estimate_unbiased_mean(std::span<const double> instance_estimates) {
  if (instance_estimates.empty()) {
    throw std::invalid_argument("mean estimator needs at least one instance");
  }
  double s = 0.0;
  for (double v : instance_estimates) s += v;
  return s / static_cast<double>(instance_estimates.size());
}

}  // namespace turnsample

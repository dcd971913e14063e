#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "turnsample/random.hpp"

namespace turnsample {

// Arithmetic over the Mersenne prime 2^61 - 1, used by the fingerprint test.
inline constexpr std::uint64_t kFieldPrime = (1ULL << 61) - 1;

inline std::uint64_t field_mul(std::uint64_t a, std::uint64_t b) {
  unsigned __int128 t = static_cast<unsigned __int128>(a) * b;
  std::uint64_t lo = static_cast<std::uint64_t>(t & kFieldPrime);
  std::uint64_t hi = static_cast<std::uint64_t>(t >> 61);
  std::uint64_t s = lo + hi;
  if (s >= kFieldPrime) s -= kFieldPrime;
  return s;
}

inline std::uint64_t field_add(std::uint64_t a, std::uint64_t b) {
  std::uint64_t s = a + b;
  if (s >= kFieldPrime) s -= kFieldPrime;
  return s;
}

inline std::uint64_t field_pow(std::uint64_t base, std::uint64_t exp) {
  std::uint64_t r = 1;
  while (exp) {
    if (exp & 1) r = field_mul(r, base);
    base = field_mul(base, base);
    exp >>= 1;
  }
  return r;
}

inline std::uint64_t field_from_signed(std::int64_t v) {
  if (v >= 0) return static_cast<std::uint64_t>(v) % kFieldPrime;
  std::uint64_t m = static_cast<std::uint64_t>(-(v + 1)) + 1;  // |v| without overflow
  std::uint64_t r = m % kFieldPrime;
  return r == 0 ? 0 : kFieldPrime - r;
}

// One 1-sparse detector: (sum of deltas, index-weighted sum, fingerprint
// sum_i delta_i * r^i over the prime field).  A random-evaluation check
// accepts a non-1-sparse content with probability <= n / kFieldPrime.
struct OneSparseCell {
  std::int64_t sum = 0;
  std::int64_t weighted = 0;
  std::uint64_t fingerprint = 0;

  void add(std::uint32_t index, std::int64_t delta, std::uint64_t r) {
    sum += delta;
    weighted += delta * static_cast<std::int64_t>(index);
    fingerprint = field_add(fingerprint, field_mul(field_from_signed(delta), field_pow(r, index)));
  }

  bool empty() const { return sum == 0 && weighted == 0 && fingerprint == 0; }

  struct Recovered {
    std::uint32_t index;
    std::int64_t value;
  };

  // Exact decode when the cell holds exactly one nonzero coordinate.
  std::optional<Recovered> decode(std::uint32_t universe, std::uint64_t r) const {
    if (sum == 0) return std::nullopt;
    if (weighted % sum != 0) return std::nullopt;
    std::int64_t idx = weighted / sum;
    if (idx < 1 || idx > static_cast<std::int64_t>(universe)) return std::nullopt;
    std::uint64_t expect = field_mul(field_from_signed(sum), field_pow(r, static_cast<std::uint64_t>(idx)));
    if (expect != fingerprint) return std::nullopt;
    return Recovered{static_cast<std::uint32_t>(idx), sum};
  }

  void merge(const OneSparseCell& other) {
    sum += other.sum;
    weighted += other.weighted;
    fingerprint = field_add(fingerprint, other.fingerprint);
  }
};

// rows x buckets grid of 1-sparse cells with classic one-bucket-per-row
// hashing; recovers every item that isolates in at least one row.
class DetectorGrid {
 public:
  DetectorGrid(std::uint32_t rows, std::uint32_t buckets, std::uint32_t universe,
               std::uint64_t seed)
      : rows_(rows),
        buckets_(buckets),
        universe_(universe),
        seed_(seed),
        r_(2 + mix64(seed ^ 0x452821e638d01377ULL) % (kFieldPrime - 3)),
        cells_(static_cast<std::size_t>(rows) * buckets) {}

  void add(std::uint32_t index, std::int64_t delta) {
    for (std::uint32_t row = 0; row < rows_; ++row) {
      cells_[static_cast<std::size_t>(row) * buckets_ + bucket_of(row, index)].add(index, delta, r_);
    }
  }

  struct Item {
    std::uint32_t index;
    std::int64_t value;
  };

  // All verified singleton decodes, deduplicated, sorted by index.
  std::vector<Item> recover() const;

  void merge(const DetectorGrid& other);

  std::uint32_t rows() const { return rows_; }
  std::uint32_t buckets() const { return buckets_; }

 private:
  std::uint32_t bucket_of(std::uint32_t row, std::uint32_t index) const {
    return static_cast<std::uint32_t>(
        hash_combine(seed_ ^ 0x13198a2e03707344ULL, (static_cast<std::uint64_t>(row) << 32) | index) %
        buckets_);
  }

  std::uint32_t rows_;
  std::uint32_t buckets_;
  std::uint32_t universe_;
  std::uint64_t seed_;
  std::uint64_t r_;
  std::vector<OneSparseCell> cells_;
};

}  // namespace turnsample

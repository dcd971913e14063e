#include "turnsample/l0_sampler.hpp"

#include <bit>
#include <cmath>

namespace turnsample {

L0Sampler::L0Sampler(std::uint32_t n, std::uint64_t seed, L0SamplerConfig config)
    : n_(n), seed_(seed) {
  std::uint32_t l = 0;
  while ((1u << l) < n) ++l;
  levels_ = l + 1;
  copies_ = config.copies;
  if (copies_ == 0) {
    copies_ = std::max<std::uint32_t>(
        7, static_cast<std::uint32_t>(std::ceil(std::log2(1.0 / config.fail_budget))));
  }
  field_points_.resize(copies_);
  for (std::uint32_t c = 0; c < copies_; ++c) {
    field_points_[c] = 2 + mix64(hash_combine(seed_, 0xbeef00 + c)) % (kFieldPrime - 3);
  }
  cells_.assign(static_cast<std::size_t>(copies_) * levels_, OneSparseCell{});
}

std::uint32_t L0Sampler::depth(std::uint32_t copy, std::uint32_t index) const {
  std::uint64_t h = hash_combine(seed_ ^ (0x9216d5d98979fb1bULL + copy), index);
  std::uint32_t d = static_cast<std::uint32_t>(std::countr_one(h));
  return std::min(d, levels_ - 1);
}

void L0Sampler::update(const TurnstileUpdate& u) {
  for (std::uint32_t c = 0; c < copies_; ++c) {
    std::uint32_t dm = depth(c, u.index);
    for (std::uint32_t l = 0; l <= dm; ++l) {
      cells_[static_cast<std::size_t>(c) * levels_ + l].add(u.index, u.delta, field_points_[c]);
    }
  }
}

std::optional<L0Sample> L0Sampler::sample() const {
  for (std::uint32_t l = 0; l < levels_; ++l) {
    for (std::uint32_t c = 0; c < copies_; ++c) {
      const auto& cell = cells_[static_cast<std::size_t>(c) * levels_ + l];
      if (auto got = cell.decode(n_, field_points_[c])) {
        return L0Sample{got->index, got->value};
      }
    }
  }
  return std::nullopt;
}

void L0Sampler::merge(const L0Sampler& other) {
  if (other.seed_ != seed_ || other.cells_.size() != cells_.size()) {
    throw std::invalid_argument("L0 sampler mismatch in merge");
  }
  for (std::size_t i = 0; i < cells_.size(); ++i) cells_[i].merge(other.cells_[i]);
}

}  // namespace turnsample

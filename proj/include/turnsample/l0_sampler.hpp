#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "turnsample/sparse_recovery.hpp"
#include "turnsample/stream.hpp"

namespace turnsample {

struct L0SamplerConfig {
  double fail_budget = 0.01;  // delta
  std::uint32_t copies = 0;   // 0 -> max(7, ceil(log2(1/delta)))
};

struct L0Sample {
  std::uint32_t index = 0;
  std::int64_t value = 0;  // exact frequency
};

// Uniform-on-support sampler returning the sampled coordinate's exact
// frequency.  Independent copies each carry one 1-sparse detector per
// subsampling level; the sample comes from the lowest level whose detector
// verifies a singleton.
class L0Sampler {
 public:
  L0Sampler(std::uint32_t n, std::uint64_t seed, L0SamplerConfig config = {});

  void update(const TurnstileUpdate& u);
  std::optional<L0Sample> sample() const;  // nullopt = FAIL
  void merge(const L0Sampler& other);

  std::uint32_t levels() const { return levels_; }
  std::uint32_t copies() const { return copies_; }

 private:
  std::uint32_t depth(std::uint32_t copy, std::uint32_t index) const;

  std::uint32_t n_;
  std::uint64_t seed_;
  std::uint32_t levels_;
  std::uint32_t copies_;
  std::vector<std::uint64_t> field_points_;  // fingerprint evaluation point per copy
  std::vector<OneSparseCell> cells_;         // copies * levels
};

}  // namespace turnsample

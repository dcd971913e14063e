#pragma once

#include <cstdint>
#include <optional>
#include <vector>

namespace turnsample {

// Result of one sampler instance: an index (with an optional value estimate)
// or FAIL.  Samplers never throw for FAIL; errors are reserved for contract
// violations.
struct SampleOutcome {
  std::optional<std::uint32_t> index;
  std::optional<double> value_estimate;
  std::uint32_t inner_used = 0;
  std::uint32_t clamp_events = 0;

  // Unconsumed unbiased estimates of x_index from the winning inner sample,
  // available to downstream rejection stages, plus their anchor.
  std::vector<double> spare_estimates;
  double anchor = 0.0;

  bool ok() const { return index.has_value(); }
};

}  // namespace turnsample

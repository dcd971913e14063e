#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace turnsample {

// Aggregated result of a verification run: T independent sampler instances
// against the exact weight distribution.  Every randomized report carries its
// seed; the body is reproducible byte for byte, timing lives in a separate
// section excluded from that guarantee.
struct RunReport {
  std::string sampler;
  std::string config_echo;  // JSON blob of the effective configuration
  std::uint64_t seed = 0;
  std::uint64_t trials = 0;
  std::uint64_t successes = 0;
  std::vector<double> empirical;  // conditioned on success
  std::vector<double> exact;
  double tv = 0.0;
  double fail_rate = 0.0;
  std::uint64_t clamp_events = 0;
  std::uint64_t clip_events = 0;

  double tv_threshold = 0.0;
  double fail_threshold = 0.0;
  bool thresholds_pass = false;

  // Timing section (not reproducible).
  double wall_seconds = 0.0;
  double per_update_ns = 0.0;

  std::string to_text() const;
  std::string to_json() const;  // timing under a separate "timing" key
};

// Runs `trials` jobs across a small worker pool; results land in
// caller-provided slots keyed by trial id so aggregation is order-free.
void parallel_trials(std::uint64_t trials, std::uint32_t threads,
                     const std::function<void(std::uint64_t)>& job);

}  // namespace turnsample

#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "turnsample/lp_sampler.hpp"
#include "turnsample/norm_estimators.hpp"
#include "turnsample/stream.hpp"

namespace turnsample {

struct SubsetMomentConfig {
  std::uint32_t n = 0;
  double p = 3.0;
  double eps = 0.2;
  double alpha = 0.25;          // heaviness floor for the query subset
  double repetition_constant = 40.0;  // R = ceil(c / (alpha eps^2))
  double sampler_delta = 0.1;   // per-repetition sampler FAIL budget
  PerfectSamplerConfig sampler; // inner knobs; n/p/delta are filled in

  std::uint32_t repetitions() const;
};

struct SubsetMomentResult {
  double estimate = 0.0;
  std::uint32_t repetitions = 0;
  std::uint32_t failed = 0;
  bool low_confidence = false;  // more than 10% of repetitions failed

  struct Pair {
    std::optional<std::uint32_t> index;
    double moment = 0.0;
  };
  std::vector<Pair> pairs;  // stored (i_r, C_r); reusable across query sets
};

// Combines stored (index sample, unbiased moment estimate) pairs against a
// post-stream query set.
SubsetMomentResult combine_pairs(std::vector<SubsetMomentResult::Pair> pairs, const QuerySet& q);

// One-pass form: all repetitions' sketches ingest every update.
class SubsetMomentEstimator {
 public:
  SubsetMomentEstimator(const SubsetMomentConfig& config, std::uint64_t seed);

  void update(const TurnstileUpdate& u);

  // Freezes (i_r, C_r) on first call; later calls (with any query set) reuse
  // the stored pairs without re-streaming.
  SubsetMomentResult finalize(const QuerySet& q);

 private:
  struct Repetition;
  SubsetMomentConfig cfg_;
  std::uint64_t seed_;
  std::vector<std::unique_ptr<Repetition>> reps_;
  std::vector<TurnstileUpdate> replay_;  // inner samplers replay the stream lazily
  std::optional<std::vector<SubsetMomentResult::Pair>> frozen_;
};

// Replay form used by tests and the CLI: repetitions are processed in
// batches over a replayable stream, keeping memory flat.
SubsetMomentResult subset_estimate_replay(std::span<const TurnstileUpdate> updates,
                                          const QuerySet& q, const SubsetMomentConfig& config,
                                          std::uint64_t seed, std::uint32_t threads = 1);

}  // namespace turnsample

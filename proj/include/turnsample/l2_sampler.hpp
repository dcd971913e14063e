#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "turnsample/countsketch.hpp"
#include "turnsample/norm_estimators.hpp"
#include "turnsample/random.hpp"
#include "turnsample/stream.hpp"

namespace turnsample {

struct L2SamplerConfig {
  std::uint32_t n = 0;
  double dup_exponent = 2.0;    // c: each coordinate conceptually duplicated n^c times
  double eta = 0.1;             // grid ratio for the simulated non-max duplicates
  double clip_exponent = 12.0;  // exponential clip range [n^-c', n^c']
  std::uint32_t cs_rows = 9;
  std::uint32_t cs_buckets = 4096;
  std::uint32_t estimate_instances = 64;  // A independent single-row estimators
  std::uint32_t estimate_buckets = 1024;
  std::uint32_t gaussian_reps = 45;
  double gap_threshold = 2.0;  // kappa: pass needs gap > kappa * R / (mu * sqrt(buckets))
  double delta = 0.01;         // FAIL budget after retries
  bool naive_duplication = false;  // materialize all n^c duplicates (small n only)

  std::uint32_t attempts() const;
  std::uint64_t duplicates() const;  // round(n^c)
};

struct L2SampleOutcome {
  std::optional<std::uint32_t> index;
  std::vector<double> unbiased_estimates;  // independent unbiased estimates of x_index
  double relative_estimate = 0.0;          // their mean; constant-factor anchor
  std::uint32_t attempts_used = 0;

  bool ok() const { return index.has_value(); }
};

// One linear-sketch instance of the exponential-scaling L2 sampler: every
// coordinate is scaled by the exact maximum of n^c inverse-root exponentials,
// sketched into a Bernoulli-membership CountSketch, and the argmax estimate
// is released only when its gap over the runner-up beats a randomized
// threshold against a Gaussian-median norm estimate of the full simulated
// duplication.
class L2SamplerInstance {
 public:
  L2SamplerInstance(const L2SamplerConfig& config, std::uint64_t seed);

  void update(const TurnstileUpdate& u);

  // Statistical test plus estimate extraction; call once per instance.
  L2SampleOutcome sample();

  const ClipCounter& clip_events() const { return clip_; }
  double scale_of(std::uint32_t index);  // exact per-index scale factor (testing)
  double sigma_of(std::uint32_t index);  // duplication l2 coefficient (testing)

 private:
  struct SparseRow {
    std::vector<std::pair<std::uint32_t, double>> slots;
    void add(std::uint32_t bucket, double v);
    double get(std::uint32_t bucket) const;
  };

  void ensure_index(std::uint32_t index);
  double cs1_estimate(std::uint32_t index, std::vector<std::uint32_t>& scratch) const;

  L2SamplerConfig cfg_;
  std::uint64_t seed_;
  DiscretizationGrid grid_;
  CsHashFamily cs1_hash_;
  std::vector<CsHashFamily> inst_hash_;
  std::vector<SparseRow> cs1_rows_;
  std::vector<SparseRow> inst_rows_;
  GaussianMedianSketch l2_norm_;
  std::vector<double> scale_;  // exact max scale per index; NaN = untouched
  std::vector<double> sigma_;
  ClipCounter clip_;
  bool sampled_ = false;
};

// Ingest-and-sample with retries over independent instances.
L2SampleOutcome l2_sample_replay(std::span<const TurnstileUpdate> updates,
                                 const L2SamplerConfig& config, std::uint64_t seed);

// Test-isolation oracle: samples exactly from x_i^2 / ||x||_2^2 and fabricates
// estimates with configurable relative Gaussian noise.  Never fails on a
// nonzero vector.
L2SampleOutcome l2_oracle_sample(const ExactVector& mirror, RandomSource& src,
                                 double noise_sigma = 0.0, std::uint32_t estimate_count = 64);

}  // namespace turnsample

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "turnsample/countsketch.hpp"
#include "turnsample/norm_estimators.hpp"
#include "turnsample/outcome.hpp"
#include "turnsample/random.hpp"
#include "turnsample/stream.hpp"

namespace turnsample {

struct ApproxSamplerConfig {
  std::uint32_t n = 0;
  double p = 3.0;
  double eps = 0.25;
  double dup_exponent = 2.0;  // c
  double eta = 0.0;           // 0 -> eps / sqrt(ln n)
  double clip_exponent = 12.0;

  std::uint32_t cs1_rows = 9;
  double cs1_bucket_scale = 1024.0;  // buckets = scale * n^{1-2/p} * ln(1/eps)
  std::uint32_t cs2_rows = 8;
  double cs2_bucket_scale = 1024.0;  // conceptual range = scale * (n^{c+1})^{1-2/p}
  std::uint32_t cs2_materialized_cap = 64;  // at most this many buckets kept per row

  std::uint32_t gaussian_reps = 35;
  double candidate_divisor = 400.0;  // |v_i| > n^{c/p} Fp^{1/p} / (divisor * ln(1/eps))
  double gap_threshold = 16.0;       // kappa: gap > kappa R / (mu sqrt(range))

  bool with_value_table = true;
  double value_bucket_scale = 16.0;  // buckets = scale * (1/eps^2) n^{1-2/p} ln(1/eps)

  std::uint32_t fp_instances = 5;  // parallel two-approx moment estimator

  enum class Path { kFast, kNaiveShared, kNaiveIndependent };
  Path path = Path::kFast;

  std::uint64_t duplicates() const;
  double eta_value() const;
  std::uint32_t cs1_buckets() const;
  std::uint32_t cs2_bucket_range() const;
  std::uint32_t cs2_materialized() const;
  std::uint32_t value_buckets() const;
};

// Two-stage duplication-simulating sampler.  Stage 1 sketches the per-index
// maximum scaled duplicate; stage 2 keeps a truncated CountSketch of the
// remaining duplicates for the randomized gap test against a Gaussian-median
// norm estimate of the whole simulated duplication.
//
// kFast consumes the per-index duplicate realization as cell counts plus
// per-bucket binomial occupancies; kNaiveShared expands the same realization
// into individual duplicates and re-accumulates them one at a time (tables
// match kFast bit for bit under a shared seed); kNaiveIndependent draws every
// duplicate's exponential, memberships, and signs directly.
class ApproxLpSampler {
 public:
  ApproxLpSampler(const ApproxSamplerConfig& config, std::uint64_t seed);

  void update(const TurnstileUpdate& u);
  SampleOutcome query();  // call once

  struct OpCounters {
    std::uint64_t duplicate_events = 0;  // naive paths: duplicates touched per update
    std::uint64_t cell_events = 0;       // fast path: (grid cell, row) pairs per update
  };
  const OpCounters& ops() const { return ops_; }
  const ClipCounter& clip_events() const { return clip_; }

  // State accessors for the replay-equivalence harness.
  const std::vector<double>& stage1_table() const { return cs1_; }
  const std::vector<double>& stage2_table() const { return cs2_; }
  const std::vector<double>& norm_accumulators() const { return l2_acc_; }
  double stage1_scale(std::uint32_t index);  // I_{q*} for the index
  double sigma(std::uint32_t index);

  std::uint32_t candidate_count() const { return last_candidates_; }

 private:
  struct IndexState {
    bool ready = false;
    double scale = 0.0;  // I_{q*}
    double sigma = 0.0;
    std::vector<double> cs2_coeff;  // rows x materialized buckets
  };

  void ensure_index(std::uint32_t index);
  void build_from_realization(std::uint32_t, IndexState& st, RandomSource& src);
  void build_independent(std::uint32_t, IndexState& st, RandomSource& src);
  double cs1_median(const std::vector<double>& table, std::uint32_t rows,
                    const CsHashFamily& hash, std::uint32_t index,
                    std::vector<std::uint32_t>& scratch) const;

  ApproxSamplerConfig cfg_;
  std::uint64_t seed_;
  DiscretizationGrid grid_;
  CsHashFamily cs1_hash_;
  CsHashFamily value_hash_;
  std::vector<double> cs1_;    // dense cs1_rows x cs1_buckets
  std::vector<double> cs2_;    // dense cs2_rows x materialized buckets
  std::vector<double> value_;  // dense cs1_rows x value_buckets
  std::vector<double> l2_acc_;
  FpTwoApprox fp_;
  std::vector<IndexState> states_;
  OpCounters ops_;
  ClipCounter clip_;
  bool queried_ = false;
  std::uint32_t last_candidates_ = 0;
};

}  // namespace turnsample

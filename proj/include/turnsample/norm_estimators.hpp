#pragma once

#include <cstdint>
#include <vector>

#include "turnsample/random.hpp"
#include "turnsample/sparse_recovery.hpp"
#include "turnsample/stream.hpp"

namespace turnsample {

enum class NormKind { kF2TwoApprox, kFpTwoApprox, kFpUnbiased, kL2Gaussian };
enum class NormBackend { kSketched, kExactOracle };

struct NormEstimate {
  double value = 0.0;
  NormKind kind = NormKind::kF2TwoApprox;
  NormBackend backend = NormBackend::kSketched;
};

// AMS: median over groups of means of squared signed sums.
class F2Sketch {
 public:
  // groups = 0 picks 2*ceil(4 ln n) + 1.
  F2Sketch(std::uint32_t n, std::uint64_t seed, std::uint32_t groups = 0,
           std::uint32_t group_size = 48);

  void update(std::uint32_t index, std::int64_t delta);
  NormEstimate estimate() const;
  void merge(const F2Sketch& other);

 private:
  double sign(std::uint32_t acc, std::uint32_t index) const;
  std::uint64_t seed_;
  std::uint32_t groups_;
  std::uint32_t group_size_;
  std::vector<double> acc_;  // groups * group_size signed sums
};

// R = (5/4) * median_j | sum_i coeff_i(j) x_i |, coefficients iid Gaussian.
// With a per-index scale sigma_i, coefficient (i,j) is sigma_i * phi_{i,j};
// by 2-stability this matches summing sigma_i duplicated unit contributions,
// so the same sketch serves both plain vectors and simulated duplications.
class GaussianMedianSketch {
 public:
  GaussianMedianSketch(std::uint64_t seed, std::uint32_t repetitions);

  void update(std::uint32_t index, double delta, double sigma = 1.0);
  NormEstimate estimate() const;
  void merge(const GaussianMedianSketch& other);
  std::uint32_t repetitions() const { return static_cast<std::uint32_t>(acc_.size()); }

 private:
  std::uint64_t seed_;
  std::vector<double> acc_;
};

struct FpSketchConfig {
  std::uint32_t detector_rows = 10;
  std::uint32_t detector_buckets = 0;  // 0 -> min(max(32, 2n), 4096)
  double variance_knob = 128.0;        // class width t0; Var <= ~4 Fp^2 / t0
  std::uint32_t coarse_cap_divisor = 4;  // bootstrap picks levels with <= buckets/div items
};

// Unbiased F_p estimator: nested level-wise subsampling, exact heavy-hitter
// recovery per level, and inverse-probability reweighting.  Each recovered
// item is assigned a level by its exact weight against a coarse moment
// estimate from an independent bootstrap sub-sketch; an item contributes
// 2^level * |x_i|^p exactly when it survives subsampling to that level.
class FpSketch {
 public:
  FpSketch(std::uint32_t n, double p, std::uint64_t seed, FpSketchConfig config = {});

  void update(std::uint32_t index, std::int64_t delta);
  NormEstimate estimate_unbiased() const;
  void merge(const FpSketch& other);

  double exponent() const { return p_; }

 private:
  friend class FpTwoApprox;
  double coarse_from(const std::vector<DetectorGrid>& grids) const;
  std::uint32_t depth(std::uint64_t salt, std::uint32_t index) const;

  std::uint32_t n_;
  double p_;
  std::uint64_t seed_;
  std::uint32_t levels_;
  FpSketchConfig config_;
  std::vector<DetectorGrid> main_;       // one grid per level
  std::vector<DetectorGrid> bootstrap_;  // independent sibling for the coarse estimate
};

// Median of independent unbiased instances; lands in [Fp/2, 2Fp] with high
// probability.
class FpTwoApprox {
 public:
  FpTwoApprox(std::uint32_t n, double p, std::uint64_t seed, std::uint32_t instances = 15,
              FpSketchConfig config = {});

  void update(std::uint32_t index, std::int64_t delta);
  NormEstimate estimate() const;
  void merge(const FpTwoApprox& other);

 private:
  std::vector<FpSketch> instances_;
};

// Exact-oracle backends (test-only; flagged through NormBackend).
NormEstimate f2_exact(const ExactVector& v);
NormEstimate fp_exact(const ExactVector& v, double p);

}  // namespace turnsample

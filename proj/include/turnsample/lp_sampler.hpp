#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "turnsample/l2_sampler.hpp"
#include "turnsample/norm_estimators.hpp"
#include "turnsample/outcome.hpp"
#include "turnsample/stream.hpp"

namespace turnsample {

struct PerfectSamplerConfig {
  std::uint32_t n = 0;
  double p = 3.0;
  double delta = 0.01;       // outer FAIL budget
  double eps_value = 0.125;  // value-estimate accuracy target

  double accept_constant = 8.0;     // integer path: accept denominator c * n^{1-2/p}
  double frac_inner_scale = 2.0;    // N' = scale * n^{1-2/p}; denominator 4 N'
  double frac_round_constant = 7.0; // N = N' * ceil(c_R ln n)
  double poly_round_constant = 4.0; // N_poly = max(64, ceil(c_P ln n))
  std::uint32_t taylor_depth = 0;   // 0 -> ceil(3 ln n)
  std::uint32_t anchor_pool = 16;   // trailing estimates reserved for the anchor/value

  enum class AnchorMode { kTight, kScaledDown };
  AnchorMode anchor_mode = AnchorMode::kTight;

  std::uint32_t max_inner = 0;  // 0 -> path default

  L2SamplerConfig l2;  // inner sampler knobs; n is filled in automatically

  std::uint32_t taylor_terms() const;
  std::uint32_t integer_inner_budget() const;
  std::uint32_t fractional_inner_budget() const;
  double fractional_inner_scale_value() const;  // N'
};

// Truncated binomial-series estimate of x^exponent from `estimates.size()`
// independent unbiased estimates of x and an anchor y near x:
//   sum_{q=0}^{Q} C(exponent, q) y^{exponent-q} prod_{a<=q} (est_a - y).
// Expectation equals the exact truncated series; anchor quality only affects
// variance and truncation error.
double taylor_estimate_power(std::span<const double> estimates, double anchor, double exponent);

// Rejection over exact-scaled L2 samples; integer p >= 3.
SampleOutcome sample_integer_p(std::span<const TurnstileUpdate> updates,
                               const PerfectSamplerConfig& config, std::uint64_t seed);

// Any real p > 2; the product of estimates is replaced by the Taylor
// estimator of x^{p-2}.
SampleOutcome sample_fractional_p(std::span<const TurnstileUpdate> updates,
                                  const PerfectSamplerConfig& config, std::uint64_t seed);

// Polynomial weights G(z) = sum_d alpha_d |z|^{p_d}: rejection over perfect
// L_{p_D} samples with Taylor estimates of x^{p_d - p_D}.
SampleOutcome sample_polynomial(std::span<const TurnstileUpdate> updates, const GFunction& g,
                                double coefficient_bound, const PerfectSamplerConfig& config,
                                std::uint64_t seed);

// One-pass form: the full budget of inner instances is committed up front and
// every instance ingests every update.  Distributionally identical to the
// replay forms, which instantiate inner samples lazily.
class PerfectLpSamplerStream {
 public:
  PerfectLpSamplerStream(const PerfectSamplerConfig& config, std::uint64_t seed);

  void update(const TurnstileUpdate& u);
  SampleOutcome sample();  // call once

 private:
  PerfectSamplerConfig cfg_;
  std::uint64_t seed_;
  bool integer_path_;
  std::vector<L2SamplerInstance> inner_;
  F2Sketch f2_;
  FpTwoApprox fp_;
  bool sampled_ = false;
};

}  // namespace turnsample

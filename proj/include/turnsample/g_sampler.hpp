#pragma once

#include <cstdint>
#include <vector>

#include "turnsample/l0_sampler.hpp"
#include "turnsample/outcome.hpp"
#include "turnsample/stream.hpp"

namespace turnsample {

// Rejection plan for an arbitrary bounded weight function: upper_h bounds
// G over attainable values, lower_q bounds it from below over attainable
// nonzero values, repetitions covers the expected upper_h/lower_q ratio.
struct RejectionPlan {
  GFunction g = GFunction::log1p_abs();
  double upper_h = 0.0;
  double lower_q = 0.0;
  std::uint32_t repetitions = 0;

  void validate() const;
};

RejectionPlan make_log_plan(std::uint64_t stream_length, double repetition_constant = 6.0);
RejectionPlan make_cap_plan(double threshold, double p, double repetition_constant = 6.0);
RejectionPlan make_general_plan(GFunction g, double upper_h, double lower_q,
                                double repetition_constant = 6.0);

// Weighted sampling by rejection over exact-frequency uniform support
// samples.  Each repetition owns an independent linear support sampler, so
// rejections never reuse a sample; the weight is evaluated on the exact
// returned frequency.
class GSampler {
 public:
  GSampler(std::uint32_t n, std::uint32_t repetitions, std::uint64_t seed,
           L0SamplerConfig support_config = {});

  void update(const TurnstileUpdate& u);

  // Throws std::logic_error when a weight exceeds the plan's upper bound
  // (the plan was constructed wrong); FAIL otherwise surfaces as an empty
  // outcome.
  SampleOutcome sample(const RejectionPlan& plan, RandomSource& accept_src) const;

  std::uint32_t repetitions() const { return static_cast<std::uint32_t>(instances_.size()); }

  // Repetitions consumed by the last successful sample (diagnostics).
  mutable std::uint32_t last_used = 0;

 private:
  std::vector<L0Sampler> instances_;
};

}  // namespace turnsample

#include "turnsample/g_sampler.hpp"

#include <cmath>
#include <stdexcept>

namespace turnsample {

void RejectionPlan::validate() const {
  if (!(upper_h > 0.0)) throw std::invalid_argument("rejection plan needs a positive upper bound");
  if (!(lower_q > 0.0) || lower_q > upper_h) {
    throw std::invalid_argument("rejection plan needs 0 < lower bound <= upper bound");
  }
  if (repetitions == 0) throw std::invalid_argument("rejection plan needs repetitions");
}

RejectionPlan make_log_plan(std::uint64_t stream_length, double repetition_constant) {
  RejectionPlan plan;
  plan.g = GFunction::log1p_abs();
  plan.upper_h = std::log1p(static_cast<double>(stream_length));
  plan.lower_q = std::log(2.0);  // smallest nonzero |x| is 1
  plan.repetitions = static_cast<std::uint32_t>(
      std::ceil(repetition_constant * std::max(plan.upper_h, 1.0)));
  return plan;
}

RejectionPlan make_cap_plan(double threshold, double p, double repetition_constant) {
  RejectionPlan plan;
  plan.g = GFunction::cap(threshold, p);
  plan.upper_h = threshold;
  plan.lower_q = std::min(1.0, threshold);  // G(z) >= min(T, 1) for |z| >= 1
  plan.repetitions = static_cast<std::uint32_t>(
      std::ceil(repetition_constant * plan.upper_h / plan.lower_q));
  return plan;
}

RejectionPlan make_general_plan(GFunction g, double upper_h, double lower_q,
                                double repetition_constant) {
  RejectionPlan plan;
  plan.g = std::move(g);
  plan.upper_h = upper_h;
  plan.lower_q = lower_q;
  plan.repetitions =
      static_cast<std::uint32_t>(std::ceil(repetition_constant * upper_h / lower_q));
  plan.validate();
  return plan;
}

GSampler::GSampler(std::uint32_t n, std::uint32_t repetitions, std::uint64_t seed,
                   L0SamplerConfig support_config) {
  if (repetitions == 0) throw std::invalid_argument("need at least one repetition");
  instances_.reserve(repetitions);
  for (std::uint32_t r = 0; r < repetitions; ++r) {
    instances_.emplace_back(n, hash_combine(seed, 0x6a11 + r), support_config);
  }
}

void GSampler::update(const TurnstileUpdate& u) {
  for (auto& inst : instances_) inst.update(u);
}

SampleOutcome GSampler::sample(const RejectionPlan& plan, RandomSource& accept_src) const {
  plan.validate();
  SampleOutcome out;
  for (std::size_t r = 0; r < instances_.size(); ++r) {
    auto got = instances_[r].sample();
    ++out.inner_used;
    if (!got) continue;  // this repetition's support sampler failed

    double weight = plan.g(static_cast<double>(got->value));
    if (weight > plan.upper_h * (1.0 + 1e-12)) {
      throw std::logic_error("weight exceeds the plan's upper bound; plan bounds were wrong");
    }
    if (accept_src.uniform() < weight / plan.upper_h) {
      out.index = got->index;
      out.value_estimate = static_cast<double>(got->value);  // exact
      last_used = static_cast<std::uint32_t>(r + 1);
      return out;
    }
  }
  return out;
}

}  // namespace turnsample

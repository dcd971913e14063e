#include "turnsample/lp_sampler.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "turnsample/norm_estimators.hpp"

namespace turnsample {

namespace {

bool is_integral(double p) { return std::fabs(p - std::round(p)) < 1e-9; }

double pow_frac(double n, double e) { return std::pow(n, e); }

struct OuterEstimates {
  double f2 = 0.0;
  double fp = 0.0;
};

OuterEstimates ingest_norms(std::span<const TurnstileUpdate> updates, std::uint32_t n, double p,
                            std::uint64_t seed) {
  F2Sketch f2(n, hash_combine(seed, 0xf2));
  FpTwoApprox fp(n, p, hash_combine(seed, 0xf9));
  for (const auto& u : updates) {
    f2.update(u.index, u.delta);
    fp.update(u.index, u.delta);
  }
  return OuterEstimates{f2.estimate().value, fp.estimate().value};
}

double anchor_of(const L2SampleOutcome& inner, std::uint32_t pool) {
  const auto& est = inner.unbiased_estimates;
  if (est.size() <= pool) return inner.relative_estimate;
  double s = 0.0;
  for (std::size_t a = est.size() - pool; a < est.size(); ++a) s += est[a];
  return s / static_cast<double>(pool);
}

void carry_spares(SampleOutcome& out, const L2SampleOutcome& inner, std::size_t consumed,
                  std::uint32_t pool) {
  const auto& est = inner.unbiased_estimates;
  std::size_t end = est.size() > pool ? est.size() - pool : est.size();
  for (std::size_t a = consumed; a < end; ++a) out.spare_estimates.push_back(est[a]);
}

}  // namespace

std::uint32_t PerfectSamplerConfig::taylor_terms() const {
  if (taylor_depth > 0) return taylor_depth;
  return static_cast<std::uint32_t>(std::ceil(3.0 * std::log(std::max<double>(n, 2))));
}

std::uint32_t PerfectSamplerConfig::integer_inner_budget() const {
  if (max_inner > 0) return max_inner;
  double v = accept_constant * pow_frac(n, 1.0 - 2.0 / p) * std::log(1.0 / delta);
  return static_cast<std::uint32_t>(std::ceil(v));
}

double PerfectSamplerConfig::fractional_inner_scale_value() const {
  return frac_inner_scale * pow_frac(n, 1.0 - 2.0 / p);
}

std::uint32_t PerfectSamplerConfig::fractional_inner_budget() const {
  if (max_inner > 0) return max_inner;
  double rounds = std::ceil(frac_round_constant * std::log(std::max<double>(n, 2)));
  return static_cast<std::uint32_t>(std::ceil(fractional_inner_scale_value() * rounds));
}

double taylor_estimate_power(std::span<const double> estimates, double anchor, double exponent) {
  bool integral = is_integral(exponent);
  if (!integral && !(anchor > 0.0)) {
    throw std::domain_error("fractional power needs a positive anchor");
  }
  if (anchor == 0.0) throw std::domain_error("anchor must be nonzero");

  double total = std::pow(anchor, exponent);  // q = 0 term
  double coeff = 1.0;
  double prefix = 1.0;
  for (std::size_t q = 1; q <= estimates.size(); ++q) {
    coeff *= (exponent - static_cast<double>(q - 1)) / static_cast<double>(q);
    if (coeff == 0.0) break;  // integer exponent exhausted: series is exact
    prefix *= estimates[q - 1] - anchor;
    total += coeff * std::pow(anchor, exponent - static_cast<double>(q)) * prefix;
  }
  return total;
}

namespace {

struct RejectionDriver {
  std::span<const TurnstileUpdate> updates;
  const PerfectSamplerConfig& cfg;
  std::uint64_t seed;
  std::uint32_t budget;

  // accept(j, inner) -> probability in [0, inf); clamped to 1 with a counter.
  template <typename AcceptFn>
  SampleOutcome run(AcceptFn&& accept_probability, std::size_t consumed_estimates) {
    SampleOutcome out;
    RandomSource coin = RandomSource(seed).substream("accept");
    for (std::uint32_t t = 0; t < budget; ++t) {
      L2SamplerConfig inner_cfg = cfg.l2;
      inner_cfg.n = cfg.n;
      L2SampleOutcome inner =
          l2_sample_replay(updates, inner_cfg, hash_combine(seed, 0x10000ULL + t));
      ++out.inner_used;
      if (!inner.ok()) continue;  // inner slot consumed

      double q = accept_probability(*inner.index, inner);
      if (!(q >= 0.0)) q = 0.0;
      if (q > 1.0) {
        q = 1.0;
        ++out.clamp_events;
      }
      if (coin.uniform() < q) {
        out.index = inner.index;
        out.anchor = anchor_of(inner, cfg.anchor_pool);
        out.value_estimate = out.anchor;
        carry_spares(out, inner, consumed_estimates, cfg.anchor_pool);
        return out;
      }
    }
    return out;
  }
};

}  // namespace

namespace {

std::uint32_t integer_factor_count(const PerfectSamplerConfig& cfg) {
  return static_cast<std::uint32_t>(std::llround(cfg.p)) - 2;
}

double integer_accept(const PerfectSamplerConfig& cfg, double base, const L2SampleOutcome& inner) {
  std::uint32_t k = integer_factor_count(cfg);
  double prod = 1.0;
  for (std::uint32_t a = 0; a < k; ++a) prod *= std::fabs(inner.unbiased_estimates[a]);
  return base * prod;
}

double fractional_accept(const PerfectSamplerConfig& cfg, double base,
                         const L2SampleOutcome& inner) {
  std::uint32_t terms = cfg.taylor_terms();
  double anchor = anchor_of(inner, cfg.anchor_pool);
  if (anchor == 0.0) return 0.0;
  if (cfg.anchor_mode == PerfectSamplerConfig::AnchorMode::kScaledDown) {
    anchor /= std::exp(cfg.p) * std::log(std::max<double>(cfg.n, 2));
  }
  double sgn = anchor > 0.0 ? 1.0 : -1.0;
  std::vector<double> mags(terms);
  for (std::uint32_t a = 0; a < terms; ++a) mags[a] = sgn * inner.unbiased_estimates[a];
  double est = taylor_estimate_power(mags, std::fabs(anchor), cfg.p - 2.0);
  return base * std::fabs(est);
}

void check_integer_config(const PerfectSamplerConfig& cfg) {
  if (!(cfg.p > 2.0) || !is_integral(cfg.p)) {
    throw std::invalid_argument("integer path needs integer p >= 3");
  }
  if (cfg.l2.estimate_instances < integer_factor_count(cfg) + cfg.anchor_pool) {
    throw std::invalid_argument("not enough estimate instances for p-2 factors plus the anchor");
  }
}

void check_fractional_config(const PerfectSamplerConfig& cfg) {
  if (!(cfg.p > 2.0)) throw std::invalid_argument("fractional path needs p > 2");
  if (cfg.l2.estimate_instances < cfg.taylor_terms() + cfg.anchor_pool) {
    throw std::invalid_argument("not enough estimate instances for the Taylor terms plus anchor");
  }
}

double integer_base(const PerfectSamplerConfig& cfg, const OuterEstimates& norms) {
  return norms.f2 / (cfg.accept_constant * pow_frac(cfg.n, 1.0 - 2.0 / cfg.p) * norms.fp);
}

double fractional_base(const PerfectSamplerConfig& cfg, const OuterEstimates& norms) {
  return norms.f2 / (4.0 * cfg.fractional_inner_scale_value() * norms.fp);
}

}  // namespace

SampleOutcome sample_integer_p(std::span<const TurnstileUpdate> updates,
                               const PerfectSamplerConfig& config, std::uint64_t seed) {
  check_integer_config(config);
  OuterEstimates norms = ingest_norms(updates, config.n, config.p, hash_combine(seed, 0xA));
  SampleOutcome out;
  if (!(norms.fp > 0.0)) return out;  // zero vector: FAIL

  double base = integer_base(config, norms);
  RejectionDriver driver{updates, config, seed, config.integer_inner_budget()};
  return driver.run(
      [&](std::uint32_t, const L2SampleOutcome& inner) {
        return integer_accept(config, base, inner);
      },
      integer_factor_count(config));
}

SampleOutcome sample_fractional_p(std::span<const TurnstileUpdate> updates,
                                  const PerfectSamplerConfig& config, std::uint64_t seed) {
  check_fractional_config(config);
  OuterEstimates norms = ingest_norms(updates, config.n, config.p, hash_combine(seed, 0xA));
  SampleOutcome out;
  if (!(norms.fp > 0.0)) return out;

  double base = fractional_base(config, norms);
  RejectionDriver driver{updates, config, seed, config.fractional_inner_budget()};
  return driver.run(
      [&](std::uint32_t, const L2SampleOutcome& inner) {
        return fractional_accept(config, base, inner);
      },
      config.taylor_terms());
}

SampleOutcome sample_polynomial(std::span<const TurnstileUpdate> updates, const GFunction& g,
                                double coefficient_bound, const PerfectSamplerConfig& config,
                                std::uint64_t seed) {
  g.validate_polynomial(coefficient_bound);
  const auto& alphas = g.coefficients();
  const auto& exps = g.exponents();
  double p = g.degree();
  std::uint32_t terms = config.taylor_terms();

  std::uint32_t budget = std::max<std::uint32_t>(
      64, static_cast<std::uint32_t>(
              std::ceil(config.poly_round_constant * std::log(std::max<double>(config.n, 2)))));

  auto inner_sample = [&](std::uint64_t sub_seed) -> SampleOutcome {
    PerfectSamplerConfig inner_cfg = config;
    inner_cfg.p = p;
    if (p == 2.0) {
      L2SamplerConfig l2cfg = config.l2;
      l2cfg.n = config.n;
      L2SampleOutcome got = l2_sample_replay(updates, l2cfg, sub_seed);
      SampleOutcome o;
      if (got.ok()) {
        o.index = got.index;
        o.anchor = anchor_of(got, config.anchor_pool);
        o.value_estimate = o.anchor;
        carry_spares(o, got, 0, config.anchor_pool);
      }
      return o;
    }
    if (is_integral(p)) return sample_integer_p(updates, inner_cfg, sub_seed);
    return sample_fractional_p(updates, inner_cfg, sub_seed);
  };

  double dm = 5.0 * static_cast<double>(alphas.size()) * coefficient_bound;

  SampleOutcome out;
  RandomSource coin = RandomSource(seed).substream("poly-accept");
  for (std::uint32_t t = 0; t < budget; ++t) {
    SampleOutcome inner = inner_sample(hash_combine(seed, 0x20000ULL + t));
    out.inner_used += std::max<std::uint32_t>(inner.inner_used, 1);
    out.clamp_events += inner.clamp_events;
    if (!inner.ok()) continue;
    if (inner.spare_estimates.size() < terms) {
      throw std::invalid_argument("not enough spare estimates for the polynomial stage");
    }
    if (inner.anchor == 0.0) continue;

    double sgn = inner.anchor > 0.0 ? 1.0 : -1.0;
    std::vector<double> mags(terms);
    for (std::uint32_t a = 0; a < terms; ++a) mags[a] = sgn * inner.spare_estimates[a];

    double weight = 0.0;
    for (std::size_t d = 0; d < alphas.size(); ++d) {
      double r = exps[d] - p;
      double est = (r == 0.0) ? 1.0 : taylor_estimate_power(mags, std::fabs(inner.anchor), r);
      weight += alphas[d] * std::fabs(est);
    }
    double q = weight / dm;
    if (q > 1.0) {
      q = 1.0;
      ++out.clamp_events;
    }
    if (coin.uniform() < q) {
      out.index = inner.index;
      out.anchor = inner.anchor;
      out.value_estimate = inner.value_estimate;
      return out;
    }
  }
  return out;
}

PerfectLpSamplerStream::PerfectLpSamplerStream(const PerfectSamplerConfig& config,
                                               std::uint64_t seed)
    : cfg_(config),
      seed_(seed),
      integer_path_(is_integral(config.p)),
      f2_(config.n, hash_combine(seed, 0xf2)),
      fp_(config.n, config.p, hash_combine(seed, 0xf9)) {
  if (integer_path_) {
    check_integer_config(cfg_);
  } else {
    check_fractional_config(cfg_);
  }
  std::uint32_t budget =
      integer_path_ ? cfg_.integer_inner_budget() : cfg_.fractional_inner_budget();
  L2SamplerConfig inner_cfg = cfg_.l2;
  inner_cfg.n = cfg_.n;
  inner_.reserve(budget);
  // One committed instance per inner slot; an instance that fails its own
  // statistical test just skips the slot.
  for (std::uint32_t t = 0; t < budget; ++t) {
    inner_.emplace_back(inner_cfg, hash_combine(seed, 0x10000ULL + t));
  }
}

void PerfectLpSamplerStream::update(const TurnstileUpdate& u) {
  f2_.update(u.index, u.delta);
  fp_.update(u.index, u.delta);
  for (auto& inst : inner_) inst.update(u);
}

SampleOutcome PerfectLpSamplerStream::sample() {
  if (sampled_) throw std::logic_error("an instance yields one sample; build a fresh one");
  sampled_ = true;

  SampleOutcome out;
  OuterEstimates norms{f2_.estimate().value, fp_.estimate().value};
  if (!(norms.fp > 0.0)) return out;

  double base = integer_path_ ? integer_base(cfg_, norms) : fractional_base(cfg_, norms);
  std::size_t consumed = integer_path_ ? integer_factor_count(cfg_) : cfg_.taylor_terms();

  RandomSource coin = RandomSource(seed_).substream("accept");
  for (auto& inst : inner_) {
    L2SampleOutcome inner = inst.sample();
    ++out.inner_used;
    if (!inner.ok()) continue;

    double q = integer_path_ ? integer_accept(cfg_, base, inner)
                             : fractional_accept(cfg_, base, inner);
    if (!(q >= 0.0)) q = 0.0;
    if (q > 1.0) {
      q = 1.0;
      ++out.clamp_events;
    }
    if (coin.uniform() < q) {
      out.index = inner.index;
      out.anchor = anchor_of(inner, cfg_.anchor_pool);
      out.value_estimate = out.anchor;
      carry_spares(out, inner, consumed, cfg_.anchor_pool);
      return out;
    }
  }
  return out;
}

}  // namespace turnsample

#include "turnsample/subset_moment.hpp"

#include <atomic>
#include <cmath>
#include <stdexcept>
#include <thread>

namespace turnsample {

std::uint32_t SubsetMomentConfig::repetitions() const {
  if (!(alpha > 0.0) || !(eps > 0.0)) throw std::invalid_argument("alpha and eps must be positive");
  return static_cast<std::uint32_t>(std::ceil(repetition_constant / (alpha * eps * eps)));
}

namespace {

PerfectSamplerConfig inner_config(const SubsetMomentConfig& cfg) {
  PerfectSamplerConfig s = cfg.sampler;
  s.n = cfg.n;
  s.p = cfg.p;
  s.delta = cfg.sampler_delta;
  return s;
}

bool integral_p(double p) { return std::fabs(p - std::round(p)) < 1e-9; }

}  // namespace

SubsetMomentResult combine_pairs(std::vector<SubsetMomentResult::Pair> pairs, const QuerySet& q) {
  SubsetMomentResult out;
  out.repetitions = static_cast<std::uint32_t>(pairs.size());
  double total = 0.0;
  for (const auto& pr : pairs) {
    if (!pr.index.has_value()) {
      ++out.failed;  // failed repetitions contribute 0
      continue;
    }
    if (q.contains(*pr.index)) total += pr.moment;
  }
  out.estimate = pairs.empty() ? 0.0 : total / static_cast<double>(pairs.size());
  out.low_confidence = out.failed * 10 > out.repetitions;
  out.pairs = std::move(pairs);
  return out;
}

struct SubsetMomentEstimator::Repetition {
  Repetition(const SubsetMomentConfig& cfg, std::uint64_t seed)
      : sampler(inner_config(cfg), hash_combine(seed, 0x5a)),
        moment(cfg.n, cfg.p, hash_combine(seed, 0xc7)) {}

  PerfectLpSamplerStream sampler;
  FpSketch moment;
};

SubsetMomentEstimator::SubsetMomentEstimator(const SubsetMomentConfig& config, std::uint64_t seed)
    : cfg_(config), seed_(seed) {
  std::uint32_t r = cfg_.repetitions();
  reps_.reserve(r);
  for (std::uint32_t i = 0; i < r; ++i) {
    reps_.push_back(std::make_unique<Repetition>(cfg_, hash_combine(seed, 0x9000 + i)));
  }
}

void SubsetMomentEstimator::update(const TurnstileUpdate& u) {
  if (frozen_.has_value()) throw std::logic_error("estimator already finalized");
  for (auto& rep : reps_) {
    rep->sampler.update(u);
    rep->moment.update(u.index, u.delta);
  }
}

SubsetMomentResult SubsetMomentEstimator::finalize(const QuerySet& q) {
  if (!frozen_.has_value()) {
    std::vector<SubsetMomentResult::Pair> pairs;
    pairs.reserve(reps_.size());
    for (auto& rep : reps_) {
      SampleOutcome got = rep->sampler.sample();
      SubsetMomentResult::Pair pr;
      pr.index = got.index;
      pr.moment = rep->moment.estimate_unbiased().value;
      pairs.push_back(pr);
    }
    frozen_ = std::move(pairs);
    reps_.clear();
  }
  return combine_pairs(*frozen_, q);
}

SubsetMomentResult subset_estimate_replay(std::span<const TurnstileUpdate> updates,
                                          const QuerySet& q, const SubsetMomentConfig& config,
                                          std::uint64_t seed, std::uint32_t threads) {
  std::uint32_t r = config.repetitions();
  std::vector<SubsetMomentResult::Pair> pairs(r);
  PerfectSamplerConfig sampler_cfg = inner_config(config);
  bool integral = integral_p(config.p);

  auto run_rep = [&](std::uint32_t rep) {
    std::uint64_t rep_seed = hash_combine(seed, 0x9000 + rep);
    SampleOutcome got = integral
                            ? sample_integer_p(updates, sampler_cfg, hash_combine(rep_seed, 0x5a))
                            : sample_fractional_p(updates, sampler_cfg, hash_combine(rep_seed, 0x5a));
    FpSketch moment(config.n, config.p, hash_combine(rep_seed, 0xc7));
    for (const auto& u : updates) moment.update(u.index, u.delta);
    pairs[rep].index = got.index;
    pairs[rep].moment = moment.estimate_unbiased().value;
  };

  if (threads <= 1) {
    for (std::uint32_t rep = 0; rep < r; ++rep) run_rep(rep);
  } else {
    std::atomic<std::uint32_t> next{0};
    std::vector<std::thread> pool;
    for (std::uint32_t t = 0; t < threads; ++t) {
      pool.emplace_back([&] {
        while (true) {
          std::uint32_t rep = next.fetch_add(1);
          if (rep >= r) return;
          run_rep(rep);
        }
      });
    }
    for (auto& th : pool) th.join();
  }
  return combine_pairs(std::move(pairs), q);
}

}  // namespace turnsample

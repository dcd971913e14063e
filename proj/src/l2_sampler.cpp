#include "turnsample/l2_sampler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace turnsample {

namespace {
constexpr double kUnset = std::numeric_limits<double>::quiet_NaN();
}

std::uint32_t L2SamplerConfig::attempts() const {
  return std::max<std::uint32_t>(1, static_cast<std::uint32_t>(std::ceil(std::log(1.0 / delta))));
}

std::uint64_t L2SamplerConfig::duplicates() const {
  return static_cast<std::uint64_t>(std::llround(std::pow(static_cast<double>(n), dup_exponent)));
}

void L2SamplerInstance::SparseRow::add(std::uint32_t bucket, double v) {
  for (auto& slot : slots) {
    if (slot.first == bucket) {
      slot.second += v;
      return;
    }
  }
  slots.emplace_back(bucket, v);
}

double L2SamplerInstance::SparseRow::get(std::uint32_t bucket) const {
  for (const auto& slot : slots) {
    if (slot.first == bucket) return slot.second;
  }
  return 0.0;
}

L2SamplerInstance::L2SamplerInstance(const L2SamplerConfig& config, std::uint64_t seed)
    : cfg_(config),
      seed_(seed),
      grid_(config.eta, config.n, config.clip_exponent),
      cs1_hash_(hash_combine(seed, 0xc51), config.cs_buckets),
      l2_norm_(hash_combine(seed, 0x9au), config.gaussian_reps),
      scale_(config.n, kUnset),
      sigma_(config.n, 0.0) {
  if (cfg_.n == 0) throw std::invalid_argument("L2 sampler needs a positive universe size");
  cs1_rows_.resize(cfg_.cs_rows);
  inst_rows_.resize(cfg_.estimate_instances);
  inst_hash_.reserve(cfg_.estimate_instances);
  for (std::uint32_t a = 0; a < cfg_.estimate_instances; ++a) {
    inst_hash_.emplace_back(hash_combine(seed, 0xa000 + a), cfg_.estimate_buckets);
  }
}

void L2SamplerInstance::ensure_index(std::uint32_t index) {
  if (!std::isnan(scale_[index - 1])) return;

  RandomSource src = RandomSource(seed_).substream(0xe0000000ULL + index);
  std::uint64_t nc = cfg_.duplicates();

  // Exact minimum of n^c iid exponentials (max-stability), then the
  // remaining duplicates conditioned on exceeding it, counted on the grid.
  ExponentialClip clip = ExponentialClip::for_universe(cfg_.n, cfg_.clip_exponent);
  double e_min;
  DuplicateCounts rest;
  if (cfg_.naive_duplication) {
    if (nc > (1u << 16)) throw std::invalid_argument("naive duplication capped at 2^16 copies");
    std::vector<double> draws(nc);
    for (auto& e : draws) e = sample_exponential(src, clip, clip_);
    std::size_t min_at = static_cast<std::size_t>(
        std::min_element(draws.begin(), draws.end()) - draws.begin());
    e_min = draws[min_at];
    rest = DuplicateCounts{};
    std::vector<std::uint32_t> per_cell(grid_.cell_count(), 0);
    for (std::size_t j = 0; j < draws.size(); ++j) {
      if (j == min_at) continue;  // the exact max duplicate is kept unrounded
      int q = grid_.round_down_index(std::pow(draws[j], -0.5), &clip_);
      ++per_cell[q - grid_.qmin()];
    }
    for (int q = grid_.qmax(); q >= grid_.qmin(); --q) {
      std::uint32_t c = per_cell[q - grid_.qmin()];
      if (c > 0) rest.cells.push_back({q, c});
    }
  } else {
    double raw = sample_exponential(src) / static_cast<double>(nc);
    if (raw < clip.lo) {
      ++clip_.low;
      raw = clip.lo;
    }
    e_min = raw;
    rest = sample_duplicate_counts_shifted(nc - 1, 2.0, e_min, grid_, src);
  }

  double s = std::pow(e_min, -0.5);
  double sig2 = s * s;
  for (const auto& cell : rest.cells) {
    double v = grid_.value(cell.q);
    sig2 += static_cast<double>(cell.count) * v * v;
  }
  scale_[index - 1] = s;
  sigma_[index - 1] = std::sqrt(sig2);
}

void L2SamplerInstance::update(const TurnstileUpdate& u) {
  if (u.index < 1 || u.index > cfg_.n) throw std::out_of_range("update index outside universe");
  ensure_index(u.index);
  double s = scale_[u.index - 1];
  double scaled = static_cast<double>(u.delta) * s;

  std::vector<std::uint32_t> members;
  for (std::uint32_t row = 0; row < cfg_.cs_rows; ++row) {
    cs1_hash_.member_buckets(row, u.index, members);
    double g = cs1_hash_.sign(row, u.index);
    for (std::uint32_t b : members) cs1_rows_[row].add(b, g * scaled);
  }
  for (std::uint32_t a = 0; a < cfg_.estimate_instances; ++a) {
    inst_hash_[a].member_buckets(0, u.index, members);
    double g = inst_hash_[a].sign(0, u.index);
    for (std::uint32_t b : members) inst_rows_[a].add(b, g * scaled);
  }
  l2_norm_.update(u.index, static_cast<double>(u.delta), sigma_[u.index - 1]);
}

double L2SamplerInstance::cs1_estimate(std::uint32_t index,
                                       std::vector<std::uint32_t>& scratch) const {
  std::vector<double> vals;
  vals.reserve(cfg_.cs_rows);
  for (std::uint32_t row = 0; row < cfg_.cs_rows; ++row) {
    cs1_hash_.member_buckets(row, index, scratch);
    double g = cs1_hash_.sign(row, index);
    for (std::uint32_t b : scratch) vals.push_back(g * cs1_rows_[row].get(b));
  }
  if (vals.empty()) return 0.0;
  std::sort(vals.begin(), vals.end());
  std::size_t h = vals.size() / 2;
  return (vals.size() % 2 == 1) ? vals[h] : 0.5 * (vals[h - 1] + vals[h]);
}

L2SampleOutcome L2SamplerInstance::sample() {
  if (sampled_) throw std::logic_error("an instance yields one sample; build a fresh one");
  sampled_ = true;

  L2SampleOutcome out;
  std::vector<std::uint32_t> scratch;

  double best = -1.0, second = -1.0;
  std::uint32_t best_index = 0;
  for (std::uint32_t i = 1; i <= cfg_.n; ++i) {
    double est = std::fabs(cs1_estimate(i, scratch));
    if (est > best) {
      second = best;
      best = est;
      best_index = i;
    } else if (est > second) {
      second = est;
    }
  }
  if (best <= 0.0) return out;  // zero vector

  double r = l2_norm_.estimate().value;
  RandomSource query = RandomSource(seed_).substream("query");
  double mu = query.uniform(0.5, 1.5);
  double threshold = cfg_.gap_threshold * r / (mu * std::sqrt(static_cast<double>(cfg_.cs_buckets)));
  if (best - second <= threshold) return out;  // FAIL

  // scale_ is set for every touched coordinate; an untouched winner can only
  // happen on a zero-ish vector where the test cannot pass.
  if (std::isnan(scale_[best_index - 1])) return out;
  double s = scale_[best_index - 1];

  out.index = best_index;
  out.unbiased_estimates.reserve(cfg_.estimate_instances);
  double sum = 0.0;
  for (std::uint32_t a = 0; a < cfg_.estimate_instances; ++a) {
    inst_hash_[a].member_buckets(0, best_index, scratch);
    if (scratch.empty()) continue;  // hashed nowhere: drop this instance
    double est = inst_hash_[a].sign(0, best_index) * inst_rows_[a].get(scratch[0]) / s;
    out.unbiased_estimates.push_back(est);
    sum += est;
  }
  if (!out.unbiased_estimates.empty()) {
    out.relative_estimate = sum / static_cast<double>(out.unbiased_estimates.size());
  }
  return out;
}

double L2SamplerInstance::scale_of(std::uint32_t index) {
  ensure_index(index);
  return scale_[index - 1];
}

double L2SamplerInstance::sigma_of(std::uint32_t index) {
  ensure_index(index);
  return sigma_[index - 1];
}

L2SampleOutcome l2_sample_replay(std::span<const TurnstileUpdate> updates,
                                 const L2SamplerConfig& config, std::uint64_t seed) {
  std::uint32_t attempts = config.attempts();
  for (std::uint32_t t = 0; t < attempts; ++t) {
    L2SamplerInstance inst(config, hash_combine(seed, 0x17ee + t));
    for (const auto& u : updates) inst.update(u);
    L2SampleOutcome out = inst.sample();
    out.attempts_used = t + 1;
    if (out.ok()) return out;
  }
  L2SampleOutcome fail;
  fail.attempts_used = attempts;
  return fail;
}

L2SampleOutcome l2_oracle_sample(const ExactVector& mirror, RandomSource& src, double noise_sigma,
                                 std::uint32_t estimate_count) {
  L2SampleOutcome out;
  double f2 = 0.0;
  for (auto v : mirror.entries()) {
    double d = static_cast<double>(v);
    f2 += d * d;
  }
  if (f2 <= 0.0) return out;

  double u = src.uniform() * f2;
  double acc = 0.0;
  std::uint32_t chosen = mirror.size();
  for (std::uint32_t i = 1; i <= mirror.size(); ++i) {
    double d = static_cast<double>(mirror.at(i));
    acc += d * d;
    if (u < acc) {
      chosen = i;
      break;
    }
  }
  if (chosen > mirror.size()) chosen = mirror.size();

  out.index = chosen;
  double x = static_cast<double>(mirror.at(chosen));
  out.unbiased_estimates.reserve(estimate_count);
  double sum = 0.0;
  for (std::uint32_t a = 0; a < estimate_count; ++a) {
    double est = x * (1.0 + noise_sigma * sample_gaussian(src));
    out.unbiased_estimates.push_back(est);
    sum += est;
  }
  out.relative_estimate = estimate_count ? sum / estimate_count : x;
  out.attempts_used = 1;
  return out;
}

}  // namespace turnsample

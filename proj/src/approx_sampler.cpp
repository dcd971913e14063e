#include "turnsample/approx_sampler.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "turnsample/countsketch.hpp"

namespace turnsample {

std::uint64_t ApproxSamplerConfig::duplicates() const {
  return static_cast<std::uint64_t>(std::llround(std::pow(static_cast<double>(n), dup_exponent)));
}

double ApproxSamplerConfig::eta_value() const {
  if (eta > 0.0) return eta;
  double v = eps / std::sqrt(std::log(std::max<double>(n, 3)));
  return std::min(0.5, std::max(1e-4, v));
}

std::uint32_t ApproxSamplerConfig::cs1_buckets() const {
  double b = cs1_bucket_scale * std::pow(static_cast<double>(n), 1.0 - 2.0 / p) *
             std::max(std::log(1.0 / eps), 0.5);
  return std::max<std::uint32_t>(16, static_cast<std::uint32_t>(std::ceil(b)));
}

std::uint32_t ApproxSamplerConfig::cs2_bucket_range() const {
  double dup_universe = std::pow(static_cast<double>(n), dup_exponent + 1.0);
  double b = cs2_bucket_scale * std::pow(dup_universe, 1.0 - 2.0 / p);
  return std::max<std::uint32_t>(16, static_cast<std::uint32_t>(std::ceil(b)));
}

std::uint32_t ApproxSamplerConfig::cs2_materialized() const {
  return std::min(cs2_materialized_cap, cs2_bucket_range());
}

std::uint32_t ApproxSamplerConfig::value_buckets() const {
  double b = value_bucket_scale / (eps * eps) * std::pow(static_cast<double>(n), 1.0 - 2.0 / p) *
             std::max(std::log(1.0 / eps), 0.5);
  return std::max<std::uint32_t>(16, static_cast<std::uint32_t>(std::ceil(b)));
}

ApproxLpSampler::ApproxLpSampler(const ApproxSamplerConfig& config, std::uint64_t seed)
    : cfg_(config),
      seed_(seed),
      grid_(config.eta_value(), config.n, config.clip_exponent),
      cs1_hash_(hash_combine(seed, 0xc51), config.cs1_buckets()),
      value_hash_(hash_combine(seed, 0x7a1), config.value_buckets()),
      cs1_(static_cast<std::size_t>(config.cs1_rows) * config.cs1_buckets(), 0.0),
      cs2_(static_cast<std::size_t>(config.cs2_rows) * config.cs2_materialized(), 0.0),
      value_(config.with_value_table
                 ? static_cast<std::size_t>(config.cs1_rows) * config.value_buckets()
                 : 0,
             0.0),
      l2_acc_(config.gaussian_reps, 0.0),
      fp_(config.n, config.p, hash_combine(seed, 0xf9), config.fp_instances,
          FpSketchConfig{6, std::min<std::uint32_t>(std::max<std::uint32_t>(32, 2 * config.n), 256),
                         128.0, 4}),
      states_(config.n) {
  if (cfg_.n == 0) throw std::invalid_argument("sampler needs a positive universe size");
  if (!(cfg_.p > 2.0)) throw std::invalid_argument("sampler requires p > 2");
}

void ApproxLpSampler::build_from_realization(std::uint32_t, IndexState& st, RandomSource& src) {
  std::uint64_t nc = cfg_.duplicates();
  DuplicateCounts counts = sample_duplicate_counts(nc, cfg_.p, grid_, src);
  if (counts.cells.empty()) {
    // Everything clipped (cannot happen under the default clip exponent);
    // park the index at the bottom of the grid.
    st.scale = grid_.value(grid_.qmin());
    st.sigma = st.scale;
    st.cs2_coeff.assign(static_cast<std::size_t>(cfg_.cs2_rows) * cfg_.cs2_materialized(), 0.0);
    return;
  }

  int q_star = counts.max_cell();
  st.scale = grid_.value(q_star);

  double sig2 = 0.0;
  for (const auto& cell : counts.cells) {
    double v = grid_.value(cell.q);
    sig2 += static_cast<double>(cell.count) * v * v;
  }
  st.sigma = std::sqrt(sig2);

  std::uint32_t rows = cfg_.cs2_rows;
  std::uint32_t mat = cfg_.cs2_materialized();
  double inv_range = 1.0 / static_cast<double>(cfg_.cs2_bucket_range());
  st.cs2_coeff.assign(static_cast<std::size_t>(rows) * mat, 0.0);

  bool expand = cfg_.path == ApproxSamplerConfig::Path::kNaiveShared;
  for (const auto& cell : counts.cells) {
    std::uint32_t cnt = cell.count - (cell.q == q_star ? 1 : 0);  // max duplicate zeroed out
    if (cnt == 0) continue;
    double value = grid_.value(cell.q);
    for (std::uint32_t r = 0; r < rows; ++r) {
      for (std::uint32_t b = 0; b < mat; ++b) {
        std::uint64_t a = sample_binomial(src, cnt, inv_range);
        if (a == 0) continue;
        double s = signed_sum(a, value, src);
        if (expand) {
          // Re-accumulate the same realization one duplicate at a time:
          // expand the signed sum into individual +-1 placements and rebuild
          // the integer sign total before scaling.
          std::int64_t total = static_cast<std::int64_t>(std::llround(s / value));
          std::int64_t plus = (total + static_cast<std::int64_t>(a)) / 2;
          std::int64_t rebuilt = 0;
          for (std::uint64_t t = 0; t < a; ++t) {
            rebuilt += (static_cast<std::int64_t>(t) < plus) ? 1 : -1;
          }
          st.cs2_coeff[static_cast<std::size_t>(r) * mat + b] +=
              value * static_cast<double>(rebuilt);
        } else {
          st.cs2_coeff[static_cast<std::size_t>(r) * mat + b] += s;
        }
      }
    }
  }
}

void ApproxLpSampler::build_independent(std::uint32_t, IndexState& st, RandomSource& src) {
  std::uint64_t nc = cfg_.duplicates();
  if (nc > (1u << 16)) throw std::invalid_argument("naive duplication capped at 2^16 copies");
  ExponentialClip clip = ExponentialClip::for_universe(cfg_.n, cfg_.clip_exponent);

  std::vector<int> cells(nc);
  double sig2 = 0.0;
  int q_star = grid_.qmin();
  std::size_t star_at = 0;
  for (std::size_t j = 0; j < nc; ++j) {
    double e = sample_exponential(src, clip, clip_);
    int q = grid_.round_down_index(std::pow(e, -1.0 / cfg_.p), &clip_);
    cells[j] = q;
    double v = grid_.value(q);
    sig2 += v * v;
    if (q > q_star) {
      q_star = q;
      star_at = j;
    }
  }
  st.scale = grid_.value(q_star);
  st.sigma = std::sqrt(sig2);

  std::uint32_t rows = cfg_.cs2_rows;
  std::uint32_t mat = cfg_.cs2_materialized();
  std::uint32_t range = cfg_.cs2_bucket_range();
  st.cs2_coeff.assign(static_cast<std::size_t>(rows) * mat, 0.0);
  for (std::size_t j = 0; j < nc; ++j) {
    if (j == star_at) continue;
    double value = grid_.value(cells[j]);
    for (std::uint32_t r = 0; r < rows; ++r) {
      double sign = (src.next() & 1) ? 1.0 : -1.0;
      std::uint64_t pos = geometric_gap(range, src) - 1;
      while (pos < range) {
        if (pos < mat) {
          st.cs2_coeff[static_cast<std::size_t>(r) * mat + pos] += sign * value;
        }
        pos += geometric_gap(range, src);
      }
    }
  }
}

void ApproxLpSampler::ensure_index(std::uint32_t index) {
  IndexState& st = states_[index - 1];
  if (st.ready) return;
  RandomSource src = RandomSource(seed_).substream(0xe0000000ULL + index);
  if (cfg_.path == ApproxSamplerConfig::Path::kNaiveIndependent) {
    build_independent(index, st, src);
  } else {
    build_from_realization(index, st, src);
  }
  st.ready = true;
}

void ApproxLpSampler::update(const TurnstileUpdate& u) {
  if (u.index < 1 || u.index > cfg_.n) throw std::out_of_range("update index outside universe");
  ensure_index(u.index);
  const IndexState& st = states_[u.index - 1];
  double delta = static_cast<double>(u.delta);
  double scaled = delta * st.scale;

  std::vector<std::uint32_t> members;
  std::uint32_t l1 = cfg_.cs1_buckets();
  for (std::uint32_t r = 0; r < cfg_.cs1_rows; ++r) {
    cs1_hash_.member_buckets(r, u.index, members);
    double g = cs1_hash_.sign(r, u.index);
    for (std::uint32_t b : members) cs1_[static_cast<std::size_t>(r) * l1 + b] += g * scaled;
  }
  if (cfg_.with_value_table) {
    std::uint32_t lv = cfg_.value_buckets();
    for (std::uint32_t r = 0; r < cfg_.cs1_rows; ++r) {
      value_hash_.member_buckets(r, u.index, members);
      double g = value_hash_.sign(r, u.index);
      for (std::uint32_t b : members) value_[static_cast<std::size_t>(r) * lv + b] += g * scaled;
    }
  }

  std::uint32_t mat = cfg_.cs2_materialized();
  for (std::uint32_t r = 0; r < cfg_.cs2_rows; ++r) {
    for (std::uint32_t b = 0; b < mat; ++b) {
      cs2_[static_cast<std::size_t>(r) * mat + b] +=
          delta * st.cs2_coeff[static_cast<std::size_t>(r) * mat + b];
    }
  }

  for (std::uint32_t j = 0; j < cfg_.gaussian_reps; ++j) {
    RandomSource g = RandomSource(hash_combine(seed_, 0x12ee)).substream(
        (static_cast<std::uint64_t>(j) << 32) | u.index);
    l2_acc_[j] += delta * st.sigma * sample_gaussian(g);
  }

  fp_.update(u.index, u.delta);

  // Work model for the bench: the naive paths touch each duplicate, the fast
  // path touches each (grid cell, row) pair.
  if (cfg_.path == ApproxSamplerConfig::Path::kFast) {
    ops_.cell_events += static_cast<std::uint64_t>(grid_.cell_count()) * cfg_.cs2_rows;
  } else {
    ops_.duplicate_events += cfg_.duplicates();
  }
}

double ApproxLpSampler::cs1_median(const std::vector<double>& table, std::uint32_t rows,
                                   const CsHashFamily& hash, std::uint32_t index,
                                   std::vector<std::uint32_t>& scratch) const {
  std::vector<double> vals;
  std::uint32_t l = hash.buckets_per_row();
  for (std::uint32_t r = 0; r < rows; ++r) {
    hash.member_buckets(r, index, scratch);
    double g = hash.sign(r, index);
    for (std::uint32_t b : scratch) vals.push_back(g * table[static_cast<std::size_t>(r) * l + b]);
  }
  if (vals.empty()) return 0.0;
  std::sort(vals.begin(), vals.end());
  std::size_t h = vals.size() / 2;
  return (vals.size() % 2 == 1) ? vals[h] : 0.5 * (vals[h - 1] + vals[h]);
}

SampleOutcome ApproxLpSampler::query() {
  if (queried_) throw std::logic_error("an instance yields one sample; build a fresh one");
  queried_ = true;

  SampleOutcome out;
  std::vector<std::uint32_t> scratch;

  std::vector<double> v_hat(cfg_.n, 0.0);
  for (std::uint32_t i = 1; i <= cfg_.n; ++i) {
    v_hat[i - 1] = std::fabs(cs1_median(cs1_, cfg_.cs1_rows, cs1_hash_, i, scratch));
  }

  double fp_hat = fp_.estimate().value;
  if (!(fp_hat > 0.0)) return out;
  double threshold = std::pow(static_cast<double>(cfg_.n), cfg_.dup_exponent / cfg_.p) *
                     std::pow(fp_hat, 1.0 / cfg_.p) /
                     (cfg_.candidate_divisor * std::max(std::log(1.0 / cfg_.eps), 0.5));

  std::vector<std::uint32_t> candidates;
  for (std::uint32_t i = 1; i <= cfg_.n; ++i) {
    if (v_hat[i - 1] > threshold) candidates.push_back(i);
  }
  last_candidates_ = static_cast<std::uint32_t>(candidates.size());
  if (candidates.empty()) return out;

  // Each candidate borrows one materialized stage-2 bucket per row; its
  // estimate is the stage-1 point estimate plus that bucket's noise.
  std::uint32_t mat = cfg_.cs2_materialized();
  double best = 0.0, second = 0.0;
  std::uint32_t best_index = 0;
  for (std::size_t rank = 0; rank < candidates.size(); ++rank) {
    std::uint32_t i = candidates[rank];
    std::uint32_t slot = static_cast<std::uint32_t>(rank % mat);
    std::vector<double> per_row;
    per_row.reserve(cfg_.cs2_rows);
    for (std::uint32_t r = 0; r < cfg_.cs2_rows; ++r) {
      double s = (mix64(hash_combine(seed_ ^ 0xc0b1, (static_cast<std::uint64_t>(r) << 32) | i)) & 1)
                     ? 1.0
                     : -1.0;
      per_row.push_back(v_hat[i - 1] + s * cs2_[static_cast<std::size_t>(r) * mat + slot]);
    }
    std::sort(per_row.begin(), per_row.end());
    std::size_t h = per_row.size() / 2;
    double y = (per_row.size() % 2 == 1) ? per_row[h] : 0.5 * (per_row[h - 1] + per_row[h]);
    double mag = std::fabs(y);
    if (mag > best) {
      second = best;
      best = mag;
      best_index = i;
    } else if (mag > second) {
      second = mag;
    }
  }
  if (best_index == 0) return out;

  std::vector<double> mags(l2_acc_.size());
  for (std::size_t j = 0; j < l2_acc_.size(); ++j) mags[j] = std::fabs(l2_acc_[j]);
  std::sort(mags.begin(), mags.end());
  std::size_t h = mags.size() / 2;
  double r_est = 1.25 * ((mags.size() % 2 == 1) ? mags[h] : 0.5 * (mags[h - 1] + mags[h]));

  RandomSource query_src = RandomSource(seed_).substream("query");
  double mu = query_src.uniform(0.5, 1.5);
  double gap_threshold =
      cfg_.gap_threshold * r_est / (mu * std::sqrt(static_cast<double>(cfg_.cs2_bucket_range())));
  if (best - second <= gap_threshold) return out;

  out.index = best_index;
  if (cfg_.with_value_table) {
    double v = cs1_median(value_, cfg_.cs1_rows, value_hash_, best_index, scratch);
    const IndexState& st = states_[best_index - 1];
    if (st.ready && st.scale > 0.0) out.value_estimate = v / st.scale;
  }
  return out;
}

double ApproxLpSampler::stage1_scale(std::uint32_t index) {
  ensure_index(index);
  return states_[index - 1].scale;
}

double ApproxLpSampler::sigma(std::uint32_t index) {
  ensure_index(index);
  return states_[index - 1].sigma;
}

}  // namespace turnsample

#include "turnsample/norm_estimators.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <stdexcept>

namespace turnsample {

namespace {

double median_inplace(std::vector<double>& v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  std::size_t h = v.size() / 2;
  if (v.size() % 2 == 1) return v[h];
  return 0.5 * (v[h - 1] + v[h]);
}

std::uint32_t levels_for(std::uint32_t n) {
  std::uint32_t l = 0;
  while ((1u << l) < n) ++l;
  return l + 1;  // levels 0..l
}

}  // namespace

F2Sketch::F2Sketch(std::uint32_t n, std::uint64_t seed, std::uint32_t groups,
                   std::uint32_t group_size)
    : seed_(seed), groups_(groups), group_size_(group_size) {
  if (n < 2) n = 2;
  if (groups_ == 0) {
    groups_ = 2 * static_cast<std::uint32_t>(std::ceil(4.0 * std::log(static_cast<double>(n)))) + 1;
  }
  if (group_size_ == 0) throw std::invalid_argument("AMS group size must be positive");
  acc_.assign(static_cast<std::size_t>(groups_) * group_size_, 0.0);
}

double F2Sketch::sign(std::uint32_t acc, std::uint32_t index) const {
  return (mix64(hash_combine(seed_ ^ 0xa4093822299f31d0ULL,
                             (static_cast<std::uint64_t>(acc) << 32) | index)) &
          1)
             ? 1.0
             : -1.0;
}

void F2Sketch::update(std::uint32_t index, std::int64_t delta) {
  double d = static_cast<double>(delta);
  for (std::uint32_t a = 0; a < acc_.size(); ++a) acc_[a] += sign(a, index) * d;
}

NormEstimate F2Sketch::estimate() const {
  std::vector<double> group_means(groups_, 0.0);
  for (std::uint32_t g = 0; g < groups_; ++g) {
    double s = 0.0;
    for (std::uint32_t k = 0; k < group_size_; ++k) {
      double y = acc_[static_cast<std::size_t>(g) * group_size_ + k];
      s += y * y;
    }
    group_means[g] = s / static_cast<double>(group_size_);
  }
  return NormEstimate{median_inplace(group_means), NormKind::kF2TwoApprox, NormBackend::kSketched};
}

void F2Sketch::merge(const F2Sketch& other) {
  if (other.acc_.size() != acc_.size() || other.seed_ != seed_) {
    throw std::invalid_argument("F2 sketch mismatch in merge");
  }
  for (std::size_t i = 0; i < acc_.size(); ++i) acc_[i] += other.acc_[i];
}

GaussianMedianSketch::GaussianMedianSketch(std::uint64_t seed, std::uint32_t repetitions)
    : seed_(seed), acc_(repetitions, 0.0) {
  if (repetitions == 0) throw std::invalid_argument("need at least one Gaussian repetition");
}

void GaussianMedianSketch::update(std::uint32_t index, double delta, double sigma) {
  for (std::uint32_t j = 0; j < acc_.size(); ++j) {
    RandomSource g = RandomSource(seed_).substream((static_cast<std::uint64_t>(j) << 32) | index);
    acc_[j] += delta * sigma * sample_gaussian(g);
  }
}

NormEstimate GaussianMedianSketch::estimate() const {
  std::vector<double> mags(acc_.size());
  for (std::size_t j = 0; j < acc_.size(); ++j) mags[j] = std::fabs(acc_[j]);
  return NormEstimate{1.25 * median_inplace(mags), NormKind::kL2Gaussian, NormBackend::kSketched};
}

void GaussianMedianSketch::merge(const GaussianMedianSketch& other) {
  if (other.acc_.size() != acc_.size() || other.seed_ != seed_) {
    throw std::invalid_argument("Gaussian sketch mismatch in merge");
  }
  for (std::size_t i = 0; i < acc_.size(); ++i) acc_[i] += other.acc_[i];
}

FpSketch::FpSketch(std::uint32_t n, double p, std::uint64_t seed, FpSketchConfig config)
    : n_(n), p_(p), seed_(seed), levels_(levels_for(n)), config_(config) {
  if (!(p > 2.0)) throw std::invalid_argument("F_p estimator requires p > 2");
  if (config_.detector_buckets == 0) {
    config_.detector_buckets = std::min<std::uint32_t>(std::max<std::uint32_t>(32, 2 * n), 4096);
  }
  for (std::uint32_t l = 0; l < levels_; ++l) {
    main_.emplace_back(config_.detector_rows, config_.detector_buckets, n,
                       hash_combine(seed_, 0x1000 + l));
    bootstrap_.emplace_back(config_.detector_rows, config_.detector_buckets, n,
                            hash_combine(seed_, 0x2000 + l));
  }
}

std::uint32_t FpSketch::depth(std::uint64_t salt, std::uint32_t index) const {
  // P[depth >= l] = 2^-l; trailing ones of the hash.
  std::uint64_t h = hash_combine(seed_ ^ salt, index);
  std::uint32_t d = static_cast<std::uint32_t>(std::countr_one(h));
  return std::min(d, levels_ - 1);
}

void FpSketch::update(std::uint32_t index, std::int64_t delta) {
  std::uint32_t dm = depth(0x3d1c3f5a7b9e1111ULL, index);
  for (std::uint32_t l = 0; l <= dm; ++l) main_[l].add(index, delta);
  std::uint32_t db = depth(0x7a5c119ce3f0bbbbULL, index);
  for (std::uint32_t l = 0; l <= db; ++l) bootstrap_[l].add(index, delta);
}

double FpSketch::coarse_from(const std::vector<DetectorGrid>& grids) const {
  // Shallowest level whose recovered set is comfortably sparse gives an
  // inverse-weighted moment estimate; only used to set class widths, so a
  // constant-factor answer is enough.
  std::uint32_t cap = std::max<std::uint32_t>(4, config_.detector_buckets / config_.coarse_cap_divisor);
  for (std::uint32_t l = 0; l < levels_; ++l) {
    auto items = grids[l].recover();
    if (items.size() <= cap || l + 1 == levels_) {
      double s = 0.0;
      for (const auto& it : items) {
        s += std::pow(std::fabs(static_cast<double>(it.value)), p_);
      }
      return std::ldexp(s, static_cast<int>(l));  // * 2^l
    }
  }
  return 0.0;
}

NormEstimate FpSketch::estimate_unbiased() const {
  double theta = coarse_from(bootstrap_);
  if (theta <= 0.0) {
    // Nothing recovered anywhere; the zero vector estimates to zero.
    return NormEstimate{0.0, NormKind::kFpUnbiased, NormBackend::kSketched};
  }
  double total = 0.0;
  for (std::uint32_t l = 0; l < levels_; ++l) {
    for (const auto& it : main_[l].recover()) {
      double w = std::pow(std::fabs(static_cast<double>(it.value)), p_);
      // class(i): smallest level with w >= theta / (t0 * 2^level)
      double ratio = theta / (config_.variance_knob * w);
      std::uint32_t cls = 0;
      if (ratio > 1.0) {
        cls = static_cast<std::uint32_t>(std::ceil(std::log2(ratio)));
        cls = std::min(cls, levels_ - 1);
      }
      if (cls == l) total += std::ldexp(w, static_cast<int>(l));
    }
  }
  return NormEstimate{total, NormKind::kFpUnbiased, NormBackend::kSketched};
}

void FpSketch::merge(const FpSketch& other) {
  if (other.levels_ != levels_ || other.seed_ != seed_) {
    throw std::invalid_argument("F_p sketch mismatch in merge");
  }
  for (std::uint32_t l = 0; l < levels_; ++l) {
    main_[l].merge(other.main_[l]);
    bootstrap_[l].merge(other.bootstrap_[l]);
  }
}

FpTwoApprox::FpTwoApprox(std::uint32_t n, double p, std::uint64_t seed, std::uint32_t instances,
                         FpSketchConfig config) {
  if (instances == 0) throw std::invalid_argument("need at least one F_p instance");
  for (std::uint32_t k = 0; k < instances; ++k) {
    instances_.emplace_back(n, p, hash_combine(seed, 0xf00d + k), config);
  }
}

void FpTwoApprox::update(std::uint32_t index, std::int64_t delta) {
  for (auto& inst : instances_) inst.update(index, delta);
}

NormEstimate FpTwoApprox::estimate() const {
  std::vector<double> vals;
  vals.reserve(instances_.size());
  for (const auto& inst : instances_) vals.push_back(inst.estimate_unbiased().value);
  return NormEstimate{median_inplace(vals), NormKind::kFpTwoApprox, NormBackend::kSketched};
}

void FpTwoApprox::merge(const FpTwoApprox& other) {
  if (other.instances_.size() != instances_.size()) {
    throw std::invalid_argument("F_p two-approx mismatch in merge");
  }
  for (std::size_t i = 0; i < instances_.size(); ++i) instances_[i].merge(other.instances_[i]);
}

NormEstimate f2_exact(const ExactVector& v) {
  double s = 0.0;
  for (auto x : v.entries()) {
    double d = static_cast<double>(x);
    s += d * d;
  }
  return NormEstimate{s, NormKind::kF2TwoApprox, NormBackend::kExactOracle};
}

NormEstimate fp_exact(const ExactVector& v, double p) {
  double s = 0.0;
  for (auto x : v.entries()) s += std::pow(std::fabs(static_cast<double>(x)), p);
  return NormEstimate{s, NormKind::kFpUnbiased, NormBackend::kExactOracle};
}

}  // namespace turnsample

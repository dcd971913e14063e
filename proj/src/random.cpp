#include "turnsample/random.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace turnsample {

ExponentialClip ExponentialClip::for_universe(std::uint64_t n, double exponent) {
  if (n < 2) n = 2;
  double ln_n = std::log(static_cast<double>(n));
  return ExponentialClip{std::exp(-exponent * ln_n), std::exp(exponent * ln_n)};
}

double sample_exponential(RandomSource& src) {
  // -log(1-u) with u in [0,1) stays finite.
  return -std::log1p(-src.uniform());
}

double sample_exponential(RandomSource& src, const ExponentialClip& clip, ClipCounter& stats) {
  double e = sample_exponential(src);
  if (e < clip.lo) {
    ++stats.low;
    return clip.lo;
  }
  if (e > clip.hi) {
    ++stats.high;
    return clip.hi;
  }
  return e;
}

double sample_gaussian(RandomSource& src) {
  double u1 = 1.0 - src.uniform();  // (0, 1]
  double u2 = src.uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
}

namespace {

// log C(n,k) + k log p + (n-k) log(1-p)
double log_binom_pmf(std::uint64_t n, std::uint64_t k, double p) {
  double nd = static_cast<double>(n), kd = static_cast<double>(k);
  return std::lgamma(nd + 1.0) - std::lgamma(kd + 1.0) - std::lgamma(nd - kd + 1.0) +
         kd * std::log(p) + (nd - kd) * std::log1p(-p);
}

}  // namespace

std::uint64_t sample_binomial(RandomSource& src, std::uint64_t n, double p) {
  if (n == 0 || p <= 0.0) return 0;
  if (p >= 1.0) return n;
  if (p > 0.5) return n - sample_binomial(src, n, 1.0 - p);

  double u = src.uniform();
  if (n <= 16) {
    // Direct Bernoulli count; the first uniform doubles as the first trial.
    std::uint64_t k = (u < p) ? 1 : 0;
    for (std::uint64_t t = 1; t < n; ++t) k += (src.uniform() < p) ? 1 : 0;
    return k;
  }

  // Inversion walk outward from the mode; exact and O(sqrt(np)) expected.
  std::uint64_t mode = static_cast<std::uint64_t>((static_cast<double>(n) + 1.0) * p);
  if (mode > n) mode = n;
  double pmf_mode = std::exp(log_binom_pmf(n, mode, p));
  double ratio = p / (1.0 - p);

  double up_pmf = pmf_mode, down_pmf = pmf_mode;
  std::uint64_t up = mode;
  std::uint64_t down = mode;
  bool down_done = false;

  u -= pmf_mode;
  if (u < 0.0) return mode;
  while (true) {
    bool advanced = false;
    if (up < n) {
      up_pmf *= ratio * static_cast<double>(n - up) / static_cast<double>(up + 1);
      ++up;
      u -= up_pmf;
      if (u < 0.0) return up;
      advanced = true;
    }
    if (!down_done) {
      if (down == 0) {
        down_done = true;
      } else {
        down_pmf *= static_cast<double>(down) / (ratio * static_cast<double>(n - down + 1));
        --down;
        u -= down_pmf;
        if (u < 0.0) return down;
        advanced = true;
      }
    }
    if (!advanced) return mode;  // numerical leftover; mass exhausted
  }
}

std::uint64_t geometric_gap(std::uint64_t bucket_count, RandomSource& src) {
  if (bucket_count <= 1) return 1;
  double p = 1.0 / static_cast<double>(bucket_count);
  double u = src.uniform();
  double g = std::floor(std::log1p(-u) / std::log1p(-p)) + 1.0;
  if (g < 1.0) g = 1.0;
  return static_cast<std::uint64_t>(g);
}

double signed_sum(std::uint64_t count, double value, RandomSource& src) {
  if (count == 0) return 0.0;
  std::uint64_t heads = sample_binomial(src, count, 0.5);
  return value * (2.0 * static_cast<double>(heads) - static_cast<double>(count));
}

double gaussian_sum(std::uint64_t count, double value, RandomSource& src) {
  if (count == 0) return 0.0;
  return sample_gaussian(src) * std::sqrt(static_cast<double>(count)) * value;
}

DiscretizationGrid::DiscretizationGrid(double eta, std::uint64_t n, double clip_exponent)
    : eta_(eta), log_base_(std::log1p(eta)) {
  if (eta <= 0.0 || eta > 1.0) throw std::invalid_argument("grid eta must lie in (0, 1]");
  if (n < 2) n = 2;
  double ln_n = std::log(static_cast<double>(n));
  qmax_ = static_cast<int>(std::ceil(clip_exponent * ln_n / log_base_));
  qmin_ = -qmax_;
}

int DiscretizationGrid::round_down_index(double x, ClipCounter* clamped) const {
  if (!(x > 0.0)) throw std::domain_error("rnd_eta requires a positive argument");
  int q = static_cast<int>(std::floor(std::log(x) / log_base_));
  // Guard against floating slop at cell boundaries.
  while (value(q) > x) --q;
  while (value(q + 1) <= x) ++q;
  if (q < qmin_) {
    if (clamped) ++clamped->low;
    return qmin_;
  }
  if (q > qmax_) {
    if (clamped) ++clamped->high;
    return qmax_;
  }
  return q;
}

double rnd_eta(double x, const DiscretizationGrid& grid, ClipCounter* clamped) {
  return grid.round_down(x, clamped);
}

double grid_cell_probability(int q, double p, const DiscretizationGrid& grid) {
  return grid_cell_probability_shifted(q, p, 0.0, grid);
}

double grid_cell_probability_shifted(int q, double p, double shift,
                                     const DiscretizationGrid& grid) {
  // P[rnd(1/e^{1/p}) = I_q | e >= shift] * P[e >= shift], i.e. the tail cell
  // mass before renormalization.  a, b are the exponential thresholds.
  double a = std::pow(grid.value(q), -p);        // e <= a puts 1/e^{1/p} above I_q
  double b = std::pow(grid.value(q + 1), -p);    // e <= b puts it above I_{q+1}
  double lo = std::max(b - shift, 0.0);
  double hi = std::max(a - shift, 0.0);
  if (hi <= lo) return 0.0;
  // exp(-lo) - exp(-hi), evaluated stably.
  return std::exp(-lo) * -std::expm1(lo - hi);
}

namespace {

DuplicateCounts sample_counts_impl(std::uint64_t nc, double p, double shift,
                                   const DiscretizationGrid& grid, RandomSource& src) {
  DuplicateCounts out;
  if (nc == 0) return out;

  // First cell worth scanning: above it the total expected mass is < 1e-16
  // (for shift > 0 the support is capped at shift^{-1/p} outright).
  int q_start = grid.qmax();
  {
    double x_top = std::pow(static_cast<double>(nc) * 1e16, 1.0 / p);
    if (shift > 0.0) x_top = std::min(x_top, std::pow(shift, -1.0 / p));
    if (x_top < grid.value(grid.qmax())) q_start = grid.round_down_index(x_top);
  }

  // Mass above the scan window is clipped (or vanishes when shift caps it).
  // phi(q) = P[e' <= I_q^{-p}] for the shifted exponential; walking q downward
  // raises the threshold I_q^{-p} by the constant factor (1+eta)^p, so one
  // exp() per cell suffices.
  double step = std::exp(p * std::log1p(grid.eta()));
  double hi_thresh = std::pow(grid.value(q_start + 1), -p);  // e-threshold at the window top
  double phi_hi = std::exp(-std::max(hi_thresh - shift, 0.0));
  double top_clip = 1.0 - phi_hi;
  double remaining_mass = 1.0;
  std::uint64_t remaining = nc;

  std::uint64_t clipped_high =
      sample_binomial(src, remaining, std::min(std::max(top_clip, 0.0) / remaining_mass, 1.0));
  remaining -= clipped_high;
  remaining_mass -= top_clip;
  out.clipped += static_cast<std::uint32_t>(clipped_high);

  for (int q = q_start; q >= grid.qmin() && remaining > 0; --q) {
    hi_thresh *= step;  // now I_q^{-p}
    double arg = hi_thresh - shift;
    double phi_lo = arg >= 745.0 ? 0.0 : std::exp(-std::max(arg, 0.0));
    double pq = phi_hi - phi_lo;
    phi_hi = phi_lo;
    if (pq <= 0.0) {
      if (phi_lo == 0.0) break;  // everything below is in the vanished tail
      continue;
    }
    if (remaining_mass <= 0.0) break;
    // Negligible cells are skipped without consuming randomness.
    if (pq * static_cast<double>(remaining) < 1e-14 && pq < remaining_mass * 0.999) {
      remaining_mass -= pq;
      continue;
    }
    double ratio = std::min(pq / remaining_mass, 1.0);
    std::uint64_t c = sample_binomial(src, remaining, ratio);
    if (c > 0) out.cells.push_back({q, static_cast<std::uint32_t>(c)});
    remaining -= c;
    remaining_mass -= pq;
  }
  out.clipped += static_cast<std::uint32_t>(remaining);  // mass below the grid
  return out;
}

}  // namespace

DuplicateCounts sample_duplicate_counts(std::uint64_t nc, double p, const DiscretizationGrid& grid,
                                        RandomSource& src) {
  if (nc < 1) throw std::invalid_argument("duplicate count must be at least 1");
  return sample_counts_impl(nc, p, 0.0, grid, src);
}

DuplicateCounts sample_duplicate_counts_shifted(std::uint64_t nc, double p, double shift,
                                                const DiscretizationGrid& grid,
                                                RandomSource& src) {
  return sample_counts_impl(nc, p, shift, grid, src);
}

}  // namespace turnsample

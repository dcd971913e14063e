#include "turnsample/stream.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "turnsample/random.hpp"

namespace turnsample {

void ExactVector::apply(const TurnstileUpdate& u) {
  if (u.index < 1 || u.index > entries_.size()) {
    throw std::out_of_range("update index " + std::to_string(u.index) +
                            " outside universe [1, " + std::to_string(entries_.size()) + "]");
  }
  if (max_delta_ > 0 && (u.delta > max_delta_ || u.delta < -max_delta_)) {
    throw std::invalid_argument("update delta exceeds bound M");
  }
  entries_[u.index - 1] += u.delta;
  ++update_count_;
}

std::uint64_t ExactVector::support_size() const {
  std::uint64_t s = 0;
  for (auto v : entries_) s += (v != 0);
  return s;
}

GFunction GFunction::power(double p) {
  if (!(p > 0.0)) throw std::invalid_argument("power exponent must be positive");
  GFunction g;
  g.kind_ = Kind::kPower;
  g.exponents_ = {p};
  g.coefficients_ = {1.0};
  return g;
}

GFunction GFunction::polynomial(std::vector<double> coefficients, std::vector<double> exponents) {
  if (coefficients.empty() || coefficients.size() != exponents.size()) {
    throw std::invalid_argument("polynomial needs matching nonempty coefficient/exponent lists");
  }
  GFunction g;
  g.kind_ = Kind::kPolynomial;
  g.coefficients_ = std::move(coefficients);
  g.exponents_ = std::move(exponents);
  for (std::size_t d = 0; d < g.exponents_.size(); ++d) {
    if (!(g.exponents_[d] > 0.0)) throw std::invalid_argument("polynomial exponents must be positive");
    if (d > 0 && !(g.exponents_[d] > g.exponents_[d - 1])) {
      throw std::invalid_argument("polynomial exponents must be strictly increasing");
    }
    if (!(g.coefficients_[d] > 0.0)) {
      throw std::invalid_argument("polynomial coefficients must be positive");
    }
  }
  return g;
}

GFunction GFunction::log1p_abs() {
  GFunction g;
  g.kind_ = Kind::kLog;
  return g;
}

GFunction GFunction::cap(double threshold, double p) {
  if (!(threshold > 0.0)) throw std::invalid_argument("cap threshold must be positive");
  if (!(p > 0.0)) throw std::invalid_argument("cap exponent must be positive");
  GFunction g;
  g.kind_ = Kind::kCap;
  g.cap_threshold_ = threshold;
  g.exponents_ = {p};
  g.coefficients_ = {1.0};
  return g;
}

GFunction GFunction::custom_bounded(std::function<double(double)> eval, double upper,
                                    double lower) {
  if (!eval) throw std::invalid_argument("custom G needs an evaluator");
  GFunction g;
  g.kind_ = Kind::kCustomBounded;
  g.eval_ = std::move(eval);
  g.upper_ = upper;
  g.lower_ = lower;
  return g;
}

double GFunction::operator()(double z) const {
  double a = std::fabs(z);
  switch (kind_) {
    case Kind::kPower:
      return std::pow(a, exponents_[0]);
    case Kind::kPolynomial: {
      double s = 0.0;
      for (std::size_t d = 0; d < exponents_.size(); ++d) {
        s += coefficients_[d] * std::pow(a, exponents_[d]);
      }
      return s;
    }
    case Kind::kLog:
      return std::log1p(a);
    case Kind::kCap:
      return std::min(cap_threshold_, std::pow(a, exponents_[0]));
    case Kind::kCustomBounded:
      return eval_(z);
  }
  return 0.0;
}

double GFunction::degree() const {
  if (exponents_.empty()) return 1.0;
  return exponents_.back();
}

void GFunction::validate_polynomial(double coefficient_bound) const {
  if (kind_ != Kind::kPolynomial && kind_ != Kind::kPower) {
    throw std::invalid_argument("not a polynomial weight function");
  }
  for (double c : coefficients_) {
    if (!(c > 0.0 && c < coefficient_bound)) {
      throw std::invalid_argument("polynomial coefficient outside (0, M)");
    }
  }
}

std::vector<double> exact_g_distribution(const ExactVector& v, const GFunction& g) {
  std::vector<double> out(v.size(), 0.0);
  double total = 0.0;
  for (std::uint32_t i = 0; i < v.size(); ++i) {
    double w = g(static_cast<double>(v.entries()[i]));
    if (w < 0.0) throw std::invalid_argument("G must be non-negative");
    out[i] = w;
    total += w;
  }
  if (!(total > 0.0)) {
    throw DegenerateDistributionError("all-zero G weight; no distribution to sample");
  }
  for (auto& p : out) p /= total;
  return out;
}

double tv_distance(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw std::invalid_argument("tv_distance length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += std::fabs(p[i] - q[i]);
  return 0.5 * s;
}

StreamPattern stream_pattern_from_name(const std::string& name) {
  if (name == "uniform-random") return StreamPattern::kUniformRandom;
  if (name == "zipfian") return StreamPattern::kZipfian;
  if (name == "single-heavy") return StreamPattern::kSingleHeavy;
  if (name == "insert-then-cancel") return StreamPattern::kInsertThenCancel;
  throw std::invalid_argument("unknown stream pattern: " + name);
}

std::string stream_pattern_name(StreamPattern pattern) {
  switch (pattern) {
    case StreamPattern::kUniformRandom: return "uniform-random";
    case StreamPattern::kZipfian: return "zipfian";
    case StreamPattern::kSingleHeavy: return "single-heavy";
    case StreamPattern::kInsertThenCancel: return "insert-then-cancel";
  }
  return "?";
}

std::vector<TurnstileUpdate> generate_stream(const StreamConfig& config) {
  if (config.n == 0) throw std::invalid_argument("stream config: n must be positive");
  if (config.max_delta <= 0) throw std::invalid_argument("stream config: M must be positive");
  // m == 0 is a valid (empty) stream.

  RandomSource src = RandomSource(config.seed).substream("stream-gen");
  std::vector<TurnstileUpdate> out;
  out.reserve(config.m);

  auto random_delta = [&](RandomSource& s) {
    std::int64_t mag = 1 + static_cast<std::int64_t>(s.below(static_cast<std::uint64_t>(config.max_delta)));
    return (s.next() & 1) ? mag : -mag;
  };

  switch (config.pattern) {
    case StreamPattern::kUniformRandom: {
      for (std::uint64_t t = 0; t < config.m; ++t) {
        std::uint32_t idx = 1 + static_cast<std::uint32_t>(src.below(config.n));
        out.push_back({idx, random_delta(src)});
      }
      break;
    }
    case StreamPattern::kZipfian: {
      // Rank-weighted index choice, weight 1/rank; ranks permuted by seed.
      std::vector<double> cdf(config.n);
      double total = 0.0;
      for (std::uint32_t r = 0; r < config.n; ++r) {
        total += 1.0 / static_cast<double>(r + 1);
        cdf[r] = total;
      }
      std::vector<std::uint32_t> perm(config.n);
      for (std::uint32_t i = 0; i < config.n; ++i) perm[i] = i + 1;
      RandomSource shuffle_src = src.substream("perm");
      for (std::uint32_t i = config.n; i > 1; --i) {
        std::uint32_t j = static_cast<std::uint32_t>(shuffle_src.below(i));
        std::swap(perm[i - 1], perm[j]);
      }
      for (std::uint64_t t = 0; t < config.m; ++t) {
        double u = src.uniform() * total;
        auto it = std::lower_bound(cdf.begin(), cdf.end(), u);
        std::uint32_t rank = static_cast<std::uint32_t>(it - cdf.begin());
        if (rank >= config.n) rank = config.n - 1;
        out.push_back({perm[rank], random_delta(src)});
      }
      break;
    }
    case StreamPattern::kSingleHeavy: {
      std::uint32_t heavy = 1 + static_cast<std::uint32_t>(src.below(config.n));
      for (std::uint64_t t = 0; t < config.m; ++t) {
        bool to_heavy = src.uniform() < 0.9;
        std::uint32_t idx = to_heavy ? heavy : 1 + static_cast<std::uint32_t>(src.below(config.n));
        std::int64_t delta = to_heavy ? config.max_delta : random_delta(src);
        out.push_back({idx, delta});
      }
      break;
    }
    case StreamPattern::kInsertThenCancel: {
      std::uint64_t half = config.m / 2;
      for (std::uint64_t t = 0; t < half; ++t) {
        std::uint32_t idx = 1 + static_cast<std::uint32_t>(src.below(config.n));
        out.push_back({idx, random_delta(src)});
      }
      // Cancellations in reverse order; odd m leaves one trailing no-op update.
      for (std::uint64_t t = 0; t < half; ++t) {
        const auto& u = out[half - 1 - t];
        out.push_back({u.index, -u.delta});
      }
      if (config.m % 2 == 1) out.push_back({1, 0});
      break;
    }
  }
  return out;
}

ExactVector materialize(std::uint32_t n, std::int64_t max_delta,
                        std::span<const TurnstileUpdate> updates) {
  ExactVector v(n, max_delta);
  for (const auto& u : updates) v.apply(u);
  return v;
}

void write_stream_text(const std::filesystem::path& path, const StreamBounds& bounds,
                       std::span<const TurnstileUpdate> updates) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << bounds.n << ' ' << bounds.m << ' ' << bounds.max_delta << '\n';
  for (const auto& u : updates) out << u.index << ' ' << u.delta << '\n';
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

void write_stream_binary(const std::filesystem::path& path, const StreamBounds& bounds,
                         std::span<const TurnstileUpdate> updates) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  auto put64 = [&](std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    out.write(reinterpret_cast<const char*>(b), 8);
  };
  auto put32 = [&](std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    out.write(reinterpret_cast<const char*>(b), 4);
  };
  put64(bounds.n);
  put64(bounds.m);
  put64(static_cast<std::uint64_t>(bounds.max_delta));
  for (const auto& u : updates) {
    put32(u.index);
    put64(static_cast<std::uint64_t>(u.delta));
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

namespace {

bool looks_binary(std::istream& in) {
  // Text files start with an ASCII digit; the binary header's first byte is
  // the low byte of n, which may also be a digit, so probe the first line.
  int c = in.peek();
  if (c == EOF) return false;
  if (c < '0' || c > '9') return true;
  std::string line;
  std::getline(in, line);
  in.seekg(0);
  for (char ch : line) {
    if (!(std::isdigit(static_cast<unsigned char>(ch)) || ch == ' ' || ch == '-' || ch == '\r')) {
      return true;
    }
  }
  return false;
}

}  // namespace

std::pair<StreamBounds, std::vector<TurnstileUpdate>> read_stream(
    const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open stream file: " + path.string());

  StreamBounds bounds;
  std::vector<TurnstileUpdate> updates;

  if (looks_binary(in)) {
    auto get64 = [&]() {
      unsigned char b[8];
      in.read(reinterpret_cast<char*>(b), 8);
      std::uint64_t v = 0;
      for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
      return v;
    };
    auto get32 = [&]() {
      unsigned char b[4];
      in.read(reinterpret_cast<char*>(b), 4);
      std::uint32_t v = 0;
      for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
      return v;
    };
    bounds.n = static_cast<std::uint32_t>(get64());
    bounds.m = get64();
    bounds.max_delta = static_cast<std::int64_t>(get64());
    if (!in) throw std::runtime_error("truncated binary stream header: " + path.string());
    while (true) {
      std::uint32_t idx = get32();
      std::uint64_t delta = get64();
      if (!in) break;
      updates.push_back({idx, static_cast<std::int64_t>(delta)});
    }
  } else {
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty stream file: " + path.string());
    std::istringstream header(line);
    if (!(header >> bounds.n >> bounds.m >> bounds.max_delta)) {
      throw std::runtime_error("malformed stream header: " + path.string());
    }
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::istringstream row(line);
      TurnstileUpdate u;
      if (!(row >> u.index >> u.delta)) {
        throw std::runtime_error("malformed stream record: " + line);
      }
      updates.push_back(u);
    }
  }
  return {bounds, std::move(updates)};
}

QuerySet read_query_set(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open query set file: " + path.string());
  QuerySet q;
  std::uint32_t idx;
  while (in >> idx) q.members.insert(idx);
  return q;
}

}  // namespace turnsample

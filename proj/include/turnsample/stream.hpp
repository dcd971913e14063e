#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace turnsample {

// One turnstile event: coordinate `index` (1-based) changes by `delta`.
struct TurnstileUpdate {
  std::uint32_t index = 0;
  std::int64_t delta = 0;
};

struct StreamBounds {
  std::uint32_t n = 0;       // universe size
  std::uint64_t m = 0;       // declared stream length
  std::int64_t max_delta = 0;  // |delta| bound M
};

class DegenerateDistributionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Exact frequency mirror; a test/verification oracle, never consulted by
// sampler logic.
class ExactVector {
 public:
  ExactVector(std::uint32_t n, std::int64_t max_delta)
      : max_delta_(max_delta), entries_(n, 0) {}

  void apply(const TurnstileUpdate& u);

  std::uint32_t size() const { return static_cast<std::uint32_t>(entries_.size()); }
  std::int64_t at(std::uint32_t index_1based) const { return entries_.at(index_1based - 1); }
  const std::vector<std::int64_t>& entries() const { return entries_; }
  std::uint64_t update_count() const { return update_count_; }
  std::int64_t max_delta() const { return max_delta_; }

  std::uint64_t support_size() const;

 private:
  std::int64_t max_delta_;
  std::vector<std::int64_t> entries_;
  std::uint64_t update_count_ = 0;
};

// Sampling weight function G.  Non-negative and even in z (all kinds depend
// on |z| only).
class GFunction {
 public:
  enum class Kind { kPower, kPolynomial, kLog, kCap, kCustomBounded };

  static GFunction power(double p);
  // G(z) = sum_d coeff[d] * |z|^exponent[d], exponents strictly increasing.
  static GFunction polynomial(std::vector<double> coefficients, std::vector<double> exponents);
  static GFunction log1p_abs();
  static GFunction cap(double threshold, double p);
  static GFunction custom_bounded(std::function<double(double)> eval, double upper,
                                  double lower);

  double operator()(double z) const;

  Kind kind() const { return kind_; }
  double degree() const;  // leading exponent (p, or p_D for polynomials)
  const std::vector<double>& coefficients() const { return coefficients_; }
  const std::vector<double>& exponents() const { return exponents_; }
  double cap_threshold() const { return cap_threshold_; }
  double upper_bound() const { return upper_; }
  double lower_bound() const { return lower_; }

  // Checks the polynomial constraints 0 < p_1 < ... < p_D and 0 < alpha_d < M.
  void validate_polynomial(double coefficient_bound) const;

 private:
  GFunction() = default;
  Kind kind_ = Kind::kPower;
  std::vector<double> coefficients_;
  std::vector<double> exponents_;
  double cap_threshold_ = 0.0;
  double upper_ = 0.0;
  double lower_ = 0.0;
  std::function<double(double)> eval_;
};

// q_i = G(x_i) / sum_j G(x_j); throws DegenerateDistributionError when the
// total weight is zero.
std::vector<double> exact_g_distribution(const ExactVector& v, const GFunction& g);

// (1/2) * sum |p_i - q_i| over equal-length probability vectors.
double tv_distance(std::span<const double> p, std::span<const double> q);

struct QuerySet {
  std::set<std::uint32_t> members;  // subset of [n]

  bool contains(std::uint32_t index) const { return members.count(index) != 0; }
};

enum class StreamPattern { kUniformRandom, kZipfian, kSingleHeavy, kInsertThenCancel };

StreamPattern stream_pattern_from_name(const std::string& name);
std::string stream_pattern_name(StreamPattern pattern);

struct StreamConfig {
  std::uint32_t n = 0;
  std::uint64_t m = 0;
  std::int64_t max_delta = 1;
  StreamPattern pattern = StreamPattern::kUniformRandom;
  std::uint64_t seed = 0;
};

// Deterministic for a fixed config (seed included).
std::vector<TurnstileUpdate> generate_stream(const StreamConfig& config);

// Replays updates into a fresh mirror.
ExactVector materialize(std::uint32_t n, std::int64_t max_delta,
                        std::span<const TurnstileUpdate> updates);

// Stream files.  Text: header "n m M", then "index delta" per line.
// Binary: three 8-byte little-endian header values, then records of
// (4-byte unsigned index, 8-byte signed delta).
void write_stream_text(const std::filesystem::path& path, const StreamBounds& bounds,
                       std::span<const TurnstileUpdate> updates);
void write_stream_binary(const std::filesystem::path& path, const StreamBounds& bounds,
                         std::span<const TurnstileUpdate> updates);
std::pair<StreamBounds, std::vector<TurnstileUpdate>> read_stream(
    const std::filesystem::path& path);

QuerySet read_query_set(const std::filesystem::path& path);

}  // namespace turnsample

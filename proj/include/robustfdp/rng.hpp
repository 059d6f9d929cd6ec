#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string_view>

namespace robustfdp {

namespace philox {

// Philox4x32-10 round constants.
inline constexpr std::uint32_t kMul0 = 0xD2511F53u;
inline constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
inline constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
inline constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

/// One 128-bit Philox4x32-10 block: 10 bumped-key rounds over the counter.
inline std::array<std::uint32_t, 4> block(std::array<std::uint32_t, 4> ctr,
                                          std::array<std::uint32_t, 2> key) {
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t prod0 = std::uint64_t(kMul0) * ctr[0];
    const std::uint64_t prod1 = std::uint64_t(kMul1) * ctr[2];
    ctr = {std::uint32_t(prod1 >> 32) ^ ctr[1] ^ key[0], std::uint32_t(prod1),
           std::uint32_t(prod0 >> 32) ^ ctr[3] ^ key[1], std::uint32_t(prod0)};
    key[0] += kWeyl0;
    key[1] += kWeyl1;
  }
  return ctr;
}

}  // namespace philox

/// FNV-1a hash of a stream purpose label.
constexpr std::uint32_t purpose_tag(std::string_view name) {
  std::uint32_t h = 2166136261u;
  for (char c : name) {
    h ^= std::uint8_t(c);
    h *= 16777619u;
  }
  return h;
}

/// SplitMix64 finalizer, used to derive child seeds from a master seed.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

/// Child seed for a (purpose, index) pair under a master seed. Lets nested
/// work units (e.g. bootstrap replicates inside a simulation replication)
/// own independent stream families.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint32_t purpose,
                                    std::uint32_t index) {
  return mix64(seed ^ mix64((std::uint64_t(purpose) << 32) | index));
}

/// Counter-based random stream. The identity (seed, purpose, index_a,
/// index_b) pins the entire output sequence, so any unit of work can be
/// handed its own stream and results never depend on scheduling order.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint32_t purpose, std::uint32_t index_a = 0,
            std::uint32_t index_b = 0)
      : key_{std::uint32_t(seed), std::uint32_t(seed >> 32)},
        prefix_{purpose, index_a, index_b} {}

  RngStream(std::uint64_t seed, std::string_view purpose, std::uint32_t index_a = 0,
            std::uint32_t index_b = 0)
      : RngStream(seed, purpose_tag(purpose), index_a, index_b) {}

  std::uint32_t next_u32() {
    if (pos_ == 4) refill();
    return buf_[pos_++];
  }

  std::uint64_t next_u64() {
    const std::uint64_t lo = next_u32();
    const std::uint64_t hi = next_u32();
    return (hi << 32) | lo;
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform01() { return double(next_u64() >> 11) * 0x1p-53; }

  /// Uniform on (0, 1]; safe to pass through log().
  double positive_uniform() { return 1.0 - uniform01(); }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// Standard normal via Box-Muller; the second deviate of each pair is cached.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double r = std::sqrt(-2.0 * std::log(positive_uniform()));
    const double t = 2.0 * std::numbers::pi * uniform01();
    spare_ = r * std::sin(t);
    have_spare_ = true;
    return r * std::cos(t);
  }

  /// Exponential with unit mean.
  double exponential() { return -std::log(positive_uniform()); }

  /// Gamma with the given shape and unit scale (Marsaglia-Tsang).
  double gamma(double shape) {
    if (!(shape > 0.0)) throw std::invalid_argument("gamma: shape must be positive");
    if (shape < 1.0) {
      const double boost = std::pow(positive_uniform(), 1.0 / shape);
      return gamma(shape + 1.0) * boost;
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x;
      double v;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = positive_uniform();
      if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
      if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
  }

  /// Chi-squared with (possibly fractional) degrees of freedom.
  double chi_squared(double dof) { return 2.0 * gamma(0.5 * dof); }

  double weibull(double shape, double scale) {
    return scale * std::pow(-std::log(positive_uniform()), 1.0 / shape);
  }

  bool bernoulli(double prob) { return uniform01() < prob; }

 private:
  void refill() {
    buf_ = philox::block({prefix_[0], prefix_[1], prefix_[2], counter_++}, key_);
    pos_ = 0;
  }

  std::array<std::uint32_t, 2> key_;
  std::array<std::uint32_t, 3> prefix_;
  std::uint32_t counter_ = 0;
  std::array<std::uint32_t, 4> buf_{};
  int pos_ = 4;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

/// Factory handing out streams of one purpose family under one seed.
struct StreamFactory {
  std::uint64_t seed = 0;
  std::uint32_t purpose = 0;

  StreamFactory(std::uint64_t seed_, std::string_view purpose_)
      : seed(seed_), purpose(purpose_tag(purpose_)) {}
  StreamFactory(std::uint64_t seed_, std::uint32_t purpose_)
      : seed(seed_), purpose(purpose_) {}

  RngStream stream(std::uint32_t index_a = 0, std::uint32_t index_b = 0) const {
    return RngStream(seed, purpose, index_a, index_b);
  }
};

}  // namespace robustfdp

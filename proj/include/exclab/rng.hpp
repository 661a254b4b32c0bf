#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

namespace exclab {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Per-replica random stream: xoshiro256++ keyed by (master_seed, replica_id).
///
/// The key is hashed through splitmix64, so streams for distinct replica ids are
/// decorrelated and a given (seed, id) always yields the same sequence. Satisfies
/// UniformRandomBitGenerator; uniform()/exponential() are defined bit-exactly here
/// rather than through <random> distributions, whose output is library-specific.
class RngStream {
 public:
  using result_type = std::uint64_t;

  RngStream(std::uint64_t master_seed, std::uint64_t replica_id)
      : master_seed_(master_seed), replica_id_(replica_id) {
    std::uint64_t sm = master_seed ^ (0xD1B54A32D192ED03ULL * (replica_id + 1));
    for (auto& w : s_) w = splitmix64(sm);
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  /// Uniform on (0, 1].
  double uniform_pos() { return static_cast<double>(((*this)() >> 11) + 1) * 0x1.0p-53; }

  /// Exp(rate) variate.
  double exponential(double rate) { return -std::log(uniform_pos()) / rate; }

  bool bernoulli(double p) { return uniform() < p; }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    // Lemire's multiply-shift with rejection.
    unsigned __int128 m = static_cast<unsigned __int128>((*this)()) * n;
    auto low = static_cast<std::uint64_t>(m);
    if (low < n) {
      const std::uint64_t threshold = (0 - n) % n;
      while (low < threshold) {
        m = static_cast<unsigned __int128>((*this)()) * n;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  /// Poisson(mean) variate; inversion for small means, PTRS otherwise.
  std::uint64_t poisson(double mean);

  std::uint64_t master_seed() const { return master_seed_; }
  std::uint64_t replica_id() const { return replica_id_; }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  std::uint64_t master_seed_;
  std::uint64_t replica_id_;
  std::uint64_t s_[4]{};
};

inline std::uint64_t RngStream::poisson(double mean) {
  if (mean <= 0.0) return 0;
  if (mean < 10.0) {
    const double limit = std::exp(-mean);
    std::uint64_t k = 0;
    double prod = uniform_pos();
    while (prod > limit) {
      ++k;
      prod *= uniform_pos();
    }
    return k;
  }
  // Hormann's transformed rejection with squeeze (PTRS).
  const double slam = std::sqrt(mean);
  const double loglam = std::log(mean);
  const double b = 0.931 + 2.53 * slam;
  const double a = -0.059 + 0.02483 * b;
  const double invalpha = 1.1239 + 1.1328 / (b - 3.4);
  const double vr = 0.9277 - 3.6224 / (b - 2.0);
  for (;;) {
    const double u = uniform() - 0.5;
    const double v = uniform_pos();
    const double us = 0.5 - std::abs(u);
    const double k = std::floor((2.0 * a / us + b) * u + mean + 0.43);
    if (us >= 0.07 && v <= vr) return static_cast<std::uint64_t>(k);
    if (k < 0.0 || (us < 0.013 && v > us)) continue;
    if (std::log(v) + std::log(invalpha) - std::log(a / (us * us) + b) <=
        -mean + k * loglam - std::lgamma(k + 1.0))
      return static_cast<std::uint64_t>(k);
  }
}

}  // namespace exclab

#pragma once

// Seeded randomness with bit-identical results across platforms. std::mt19937_64's
// output sequence is fixed by the standard; every distribution on top of it is
// hand-rolled here because libstdc++/libc++ distribution objects are not.

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

namespace chaff {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// FNV-1a over bytes, finalized through splitmix64. Stable across runs; used for
// per-object seed derivation, not for adversarial collision resistance.
inline std::uint64_t hash64(std::string_view s, std::uint64_t seed = 0) {
  std::uint64_t h = 1469598103934665603ULL ^ seed;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return splitmix64(h);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(splitmix64(seed)) {}

  std::uint64_t next_u64() { return eng_(); }

  // Uniform in [0,1), 53 bits of mantissa.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform in [0, bound). Lemire multiply-shift with rejection; unbiased.
  std::uint64_t below(std::uint64_t bound) {
    if (bound == 0) throw std::invalid_argument("Rng::below: bound must be positive");
    while (true) {
      std::uint64_t x = next_u64();
      __uint128_t m = static_cast<__uint128_t>(x) * bound;
      std::uint64_t lo = static_cast<std::uint64_t>(m);
      if (lo >= bound || lo >= std::uint64_t(-static_cast<std::int64_t>(bound)) % bound)
        return static_cast<std::uint64_t>(m >> 64);
    }
  }

  // Inclusive on both ends.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    if (lo > hi) throw std::invalid_argument("Rng::uniform_int: empty range");
    std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
    if (span == 0) return static_cast<std::int64_t>(next_u64());  // full 64-bit range
    return lo + static_cast<std::int64_t>(below(span));
  }

  double uniform(double a, double b) { return a + (b - a) * next_double(); }

  double normal() {
    // Box-Muller, fresh pair each call; the sine half is discarded so the
    // draw count per call is fixed (2 u64 draws).
    double u = 0.0;
    do {
      u = next_double();
    } while (u <= 0.0);
    double v = next_double();
    return std::sqrt(-2.0 * std::log(u)) * std::cos(6.283185307179586476925287 * v);
  }

  double lognormal(double mu, double sigma) { return std::exp(mu + sigma * normal()); }

  double exponential(double mean) {
    double u = 0.0;
    do {
      u = next_double();
    } while (u <= 0.0);
    return -mean * std::log(u);
  }

  // Index sampled proportionally to weights (need not be normalized).
  std::size_t discrete(std::span<const double> weights) {
    double total = 0.0;
    for (double w : weights) {
      if (w < 0.0) throw std::invalid_argument("Rng::discrete: negative weight");
      total += w;
    }
    if (!(total > 0.0)) throw std::invalid_argument("Rng::discrete: zero total weight");
    double x = next_double() * total;
    double acc = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      acc += weights[i];
      if (x < acc) return i;
    }
    // x landed on the accumulated rounding slack past the last positive weight.
    for (std::size_t i = weights.size(); i-- > 0;)
      if (weights[i] > 0.0) return i;
    throw std::logic_error("Rng::discrete: unreachable");
  }

  // Fisher-Yates, high-to-low.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      using std::swap;
      swap(v[i - 1], v[j]);
    }
  }

  // Derived generator whose stream depends on this generator's state and the tag.
  Rng fork(std::uint64_t tag) { return Rng(splitmix64(next_u64() ^ splitmix64(tag))); }

 private:
  std::mt19937_64 eng_;
};

// Zipf over ranks 0..n-1 with exponent s: P(k) proportional to 1/(k+1)^s.
inline std::size_t zipf_rank(Rng& rng, std::size_t n, double s) {
  if (n == 0) throw std::invalid_argument("zipf_rank: empty support");
  std::vector<double> w(n);
  for (std::size_t k = 0; k < n; ++k) w[k] = 1.0 / std::pow(static_cast<double>(k + 1), s);
  return rng.discrete(w);
}

}  // namespace chaff

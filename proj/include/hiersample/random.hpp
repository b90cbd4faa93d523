#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <numbers>
#include <span>
#include <vector>

#include "hiersample/errors.hpp"

namespace hiersample {

namespace detail {

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace detail

/// Counter-based generator: the k-th output is mix64(key + k * golden), i.e. SplitMix64.
/// Substreams are addressed by (seed, stream ids...) so draws for one target or walk never
/// depend on how work was scheduled. Satisfies UniformRandomBitGenerator.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed) noexcept : key_(detail::mix64(seed)) {}

  static Rng substream(std::uint64_t seed, std::initializer_list<std::uint64_t> ids) noexcept {
    std::uint64_t key = detail::mix64(seed ^ 0x6a09e667f3bcc909ULL);
    for (auto id : ids) key = detail::mix64(key ^ detail::mix64(id + detail::kGolden));
    Rng r(0);
    r.key_ = key;
    return r;
  }

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept { return detail::mix64(key_ + (++counter_) * detail::kGolden); }

  // Uniform double in [0, 1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n); n > 0. Rejection sampling keeps it exactly unbiased.
  std::uint64_t below(std::uint64_t n) noexcept {
    const std::uint64_t limit = max() - max() % n;
    std::uint64_t x;
    do {
      x = (*this)();
    } while (x >= limit);
    return x % n;
  }

  // Standard normal via Box-Muller (portable, unlike std::normal_distribution).
  double normal() noexcept {
    double u1 = 1.0 - uniform();
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  // Index drawn with probability weights[k] / sum(weights); requires a positive sum.
  std::size_t weighted_index(std::span<const double> weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    if (!(total > 0.0)) throw PreconditionError("weighted_index: weights must have a positive sum");
    double r = uniform() * total;
    double acc = 0.0;
    std::size_t last_positive = 0;
    for (std::size_t k = 0; k < weights.size(); ++k) {
      if (weights[k] <= 0.0) continue;
      acc += weights[k];
      last_positive = k;
      if (r < acc) return k;
    }
    return last_positive;
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

// Partial Fisher-Yates: `count` distinct indices from [0, n), in draw order.
inline std::vector<std::uint32_t> sample_without_replacement(std::size_t n, std::size_t count, Rng& rng) {
  if (count > n) throw PreconditionError("cannot draw more items than available");
  std::vector<std::uint32_t> pool(n);
  for (std::size_t k = 0; k < n; ++k) pool[k] = static_cast<std::uint32_t>(k);
  for (std::size_t k = 0; k < count; ++k) {
    auto j = k + static_cast<std::size_t>(rng.below(n - k));
    std::swap(pool[k], pool[j]);
  }
  pool.resize(count);
  return pool;
}

}  // namespace hiersample

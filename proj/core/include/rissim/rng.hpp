#ifndef RISSIM_RNG_HPP
#define RISSIM_RNG_HPP

#include <complex>
#include <cstdint>
#include <random>
#include <string_view>

#include "rissim/common.hpp"

namespace rissim {

/**
 * Deterministic random stream with hierarchical splitting.
 *
 * Every experiment derives its randomness from one root seed. Sub-streams are
 * obtained with fork(tag): the child key is a mix of the parent key and the
 * tag, so (root, module, seed index, cycle) always addresses the same stream
 * regardless of evaluation order. This is what makes per-seed parallelism and
 * byte-identical reruns possible.
 *
 * Gaussian variates use Box-Muller on top of the raw engine rather than
 * std::normal_distribution, whose output is implementation-defined.
 */
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : key_(mix(0x9e3779b97f4a7c15ULL, seed)), engine_(key_) {}

  /// Derive an independent child stream. Does not disturb this stream.
  Rng fork(std::uint64_t tag) const { return Rng(mix(key_, tag), 0); }
  Rng fork(std::string_view tag) const { return fork(fnv1a(tag)); }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n); rejection sampling, no modulo bias.
  int uniform_int(int n) {
    if (n <= 0) throw std::invalid_argument("uniform_int: n must be positive");
    const std::uint64_t un = static_cast<std::uint64_t>(n);
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() / un * un;
    std::uint64_t v = engine_();
    while (v >= limit) v = engine_();
    return static_cast<int>(v % un);
  }

  double normal(double mean = 0.0, double stddev = 1.0) {
    // Box-Muller; u1 in (0,1] to keep the log finite.
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    return mean + stddev * std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
  }

  /// Circularly symmetric complex Gaussian CN(0, variance).
  cd complex_normal(double variance) {
    const double s = std::sqrt(variance / 2.0);
    return {normal(0.0, s), normal(0.0, s)};
  }

 private:
  Rng(std::uint64_t key, int) : key_(key), engine_(key) {}

  // splitmix64 finalizer over a combined word; good avalanche for tag trees.
  static std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
    std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  static std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const char c : s) {
      h ^= static_cast<unsigned char>(c);
      h *= 0x100000001b3ULL;
    }
    return h;
  }

  std::uint64_t key_;
  std::mt19937_64 engine_;
};

}  // namespace rissim

#endif  // RISSIM_RNG_HPP

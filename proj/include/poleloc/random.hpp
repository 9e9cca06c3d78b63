#pragma once

#include <cstdint>
#include <random>

namespace poleloc {

/// Seedable random source. All sampling goes through explicit transforms
/// (never std::*_distribution, whose output is implementation-defined), so
/// replays are bit-identical for a given seed on any standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform double in [0, 1), 53 bits of entropy.
  double uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) {
    return lo + (hi - lo) * uniform01();
  }

  /// Standard normal sample, Marsaglia polar method (stateless: the paired
  /// value is discarded so the draw count per call is data-dependent but
  /// reproducible).
  double gaussian() {
    double u, v, s;
    do {
      u = 2.0 * uniform01() - 1.0;
      v = 2.0 * uniform01() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    return u * std::sqrt(-2.0 * std::log(s) / s);
  }

  double gaussian(double mean, double stddev) {
    return mean + stddev * gaussian();
  }

  /// Independent stream seed for item `index` under a base seed; lets
  /// per-scan work run in any order (or in parallel) deterministically.
  static std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
    // splitmix64 over a golden-ratio indexed offset
    std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace poleloc

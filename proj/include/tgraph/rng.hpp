#pragma once

#include <cstdint>
#include <random>

namespace tgraph {

// Reproducibility contract: every random draw in the library goes through this
// wrapper. The engine is std::mt19937_64 (bit stream fixed by the C++
// standard) and the distributions below are fixed here, so identical seeds
// give identical bytes on every platform and toolchain. Standard-library
// distributions are deliberately avoided: their output is
// implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform in [0, 1): top 53 bits of the engine output.
  double real() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Uniform in [lo, hi).
  double real(double lo, double hi) { return lo + (hi - lo) * real(); }

  // Uniform integer in [0, n), unbiased by rejection.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = next();
    } while (x >= limit);
    return x % n;
  }

 private:
  std::mt19937_64 engine_;
};

// Derives the seed for stream number `stream` of a seeded run (one splitmix64
// step over seed XOR stream*golden-gamma). A plain seed^stream must not be
// used here: it maps nearby seeds to permutations of the same stream set, so
// e.g. datasets generated with seeds 1 and 2 would contain the same tables in
// a different order. Part of the reproducibility contract.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed ^ (stream * 0x9E3779B97F4A7C15ULL);
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace tgraph

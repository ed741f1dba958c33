#pragma once

#include <cstdint>

namespace tir {

// SplitMix64 run in counter mode: the k-th output is a fixed hash of
// seed + k*gamma, so a stream is fully determined by its seed and is
// byte-stable across platforms and standard libraries.
//
// Gaussian variates use Box-Muller on the raw uniforms instead of
// std::normal_distribution, whose output is implementation-defined.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0,1), 53 mantissa bits.
  double next_unit() { return double(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform in (0,1]; safe to feed into log().
  double next_unit_pos() { return double((next_u64() >> 11) + 1) * 0x1.0p-53; }

  double next_uniform(double lo, double hi) {
    return lo + (hi - lo) * next_unit();
  }

  // Standard normal via Box-Muller; the sine partner is cached so
  // consecutive calls consume one uniform pair per two variates.
  double next_gaussian();

  // Uniform index in [0,n). Plain modulo; the bias is irrelevant for the
  // tiny n used here and the rule is trivially reproducible.
  std::uint64_t next_index(std::uint64_t n) { return next_u64() % n; }

 private:
  std::uint64_t state_;
  bool have_cached_ = false;
  double cached_ = 0.0;
};

// One round of the SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t z);

// Stable sub-stream derivation: independent streams for (seed, tag) pairs.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag);

}  // namespace tir

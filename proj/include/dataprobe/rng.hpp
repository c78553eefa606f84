#pragma once

#include <cstdint>
#include <random>

namespace dataprobe {

// Combines a seed with a stream index into a fresh engine seed.
// splitmix64 finalizer; stable across platforms and builds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

// Seedable random stream with explicitly specified draw algorithms, so that
// identical (seed, call sequence) pairs reproduce bit-identical results on
// every platform. std::mt19937_64 is fully specified by the standard; the
// distribution transforms below are implemented here rather than taken from
// <random>, whose distributions are implementation-defined.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

  // Independent stream `index` derived from `seed`.
  static RandomStream substream(std::uint64_t seed, std::uint64_t index) {
    return RandomStream(mix_seed(seed, index));
  }

  std::uint64_t next_u64() { return engine_(); }

  // Uniform double in [0, 1) with 53 random bits.
  double next_unit() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // Standard normal via the polar method. No cached spare: one call, a
  // self-contained number of engine draws.
  double next_normal();

  // Gamma(shape, 1) via Marsaglia-Tsang, with the u^(1/shape) boost for
  // shape < 1. Requires shape > 0.
  double next_gamma(double shape);

 private:
  std::mt19937_64 engine_;
};

}  // namespace dataprobe

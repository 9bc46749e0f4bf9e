#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

#include "dpsrefine/types.hpp"

namespace dpsrefine {

/// Counter-based random generator. Every value is a pure function of
/// (seed, stream, index), so fills are order-independent and a run is
/// reproducible from its seed alone.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream)
      : key_(mix(mix(seed ^ 0xD1B54A32D192ED03ull) + stream)) {}

  /// Uniform in the open interval (0, 1).
  double uniform(std::uint64_t index) const {
    return (static_cast<double>(word(index) >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller; independent across indices.
  double normal(std::uint64_t index) const {
    const double u1 = uniform(2 * index);
    const double u2 = uniform(2 * index + 1);
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  std::uint64_t word(std::uint64_t index) const {
    return mix(key_ + index * 0x9E3779B97F4A7C15ull);
  }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  std::uint64_t key_;
};

/// Complex field with independent unit-variance real and imaginary parts
/// per entry (the CN(0, 2I) convention used by the sampler).
inline ComplexSpectrogram complex_unit_noise(int frames, int bins, int channels,
                                             std::uint64_t seed,
                                             std::uint64_t stream) {
  ComplexSpectrogram out(frames, bins, channels);
  const CounterRng rng(seed, stream);
  for (std::size_t i = 0; i < out.data.size(); ++i)
    out.data[i] = {rng.normal(2 * i), rng.normal(2 * i + 1)};
  return out;
}

}  // namespace dpsrefine

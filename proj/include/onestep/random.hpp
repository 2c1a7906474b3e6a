#pragma once

// Reproducible random streams.
//
// Each run owns a std::mt19937_64 engine. Uniform variates take the top 53
// bits of a draw; standard normals come from the Marsaglia polar method, which
// yields two variates per accepted pair (the second is cached).
//
// Ensemble run seeds are derived as splitmix64_mix(seed + (run + 1) * 0x9E3779B97F4A7C15),
// the SplitMix64 output function applied to a Weyl-sequence step.

#include <cmath>
#include <cstdint>
#include <random>

namespace onestep {

inline constexpr std::uint64_t splitmix64_mix(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

inline constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t run) noexcept {
  return splitmix64_mix(seed + (run + 1) * 0x9E3779B97F4A7C15ull);
}

class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

  // Uniform on [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform on (0, 1].
  double uniform_positive() { return static_cast<double>((engine_() >> 11) + 1) * 0x1.0p-53; }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    has_spare_ = true;
    return u * f;
  }

  double exponential(double rate) { return -std::log(uniform_positive()) / rate; }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace onestep

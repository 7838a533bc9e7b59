#pragma once

// Seeded randomness with fully specified sampling algorithms, so that runs are
// reproducible across standard library implementations (the std
// distributions are implementation-defined and are not used).

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace bgc {

using Rng = std::mt19937_64;

// Identifier recorded in training reports.
inline constexpr const char* kRngAlgorithm = "mt19937_64/rejection-uniform/box-muller";

// splitmix64 finalizer; derives independent stream seeds from one user seed.
[[nodiscard]] constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// Uniform integer in [0, bound). bound must be positive.
[[nodiscard]] inline std::uint64_t uniform_below(Rng& rng, std::uint64_t bound) {
  // Reject the low sliver that would bias the modulo.
  const std::uint64_t threshold = (0 - bound) % bound;
  for (;;) {
    const std::uint64_t r = rng();
    if (r >= threshold) return r % bound;
  }
}

// Uniform double in [0, 1) with 53 random bits.
[[nodiscard]] inline double uniform_unit(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

[[nodiscard]] inline bool bernoulli(Rng& rng, double p) { return uniform_unit(rng) < p; }

// Standard normal draws by the Box-Muller transform; caches the second value.
class NormalSampler {
 public:
  double operator()(Rng& rng) {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    do {
      u1 = uniform_unit(rng);
    } while (u1 == 0.0);
    const double u2 = uniform_unit(rng);
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

 private:
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace bgc

#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace libmlab {

// One round of the splitmix64 output mixer.
inline constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Per-replica seed: master XOR (i + 1) * golden gamma, mixed once.
inline constexpr std::uint64_t replica_seed(std::uint64_t master,
                                            std::uint64_t index) noexcept {
  return mix64(master ^ ((index + 1) * 0x9E3779B97F4A7C15ULL));
}

// Sequential random stream for one trajectory. Not thread-safe; give every
// replica its own instance.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double normal() { return normal_(engine_); }

  // Uniform on the open interval (0, 1).
  double uniform_open() {
    // 53 random bits shifted off zero.
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  double exponential() { return -std::log(uniform_open()); }

  std::uint64_t next_u64() { return engine_(); }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace libmlab

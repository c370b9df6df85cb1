#pragma once

#include <cstdint>
#include <random>

namespace symflag {

// Portable seeded generator. std::mt19937_64 output is fixed by the standard;
// the distribution helpers below avoid the implementation-defined std
// distributions so random sweeps are identical across toolchains.
class Rng {
 public:
  static constexpr const char* kName = "mt19937_64";

  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [lo, hi].
  int integer(int lo, int hi) {
    const auto span = static_cast<std::uint64_t>(hi - lo + 1);
    return lo + static_cast<int>(engine_() % span);
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace symflag

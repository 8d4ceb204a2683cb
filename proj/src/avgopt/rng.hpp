#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>

namespace avgopt {

// The one generator used everywhere: 64-bit Mersenne Twister, one stream per
// run. Variates are built from raw engine output rather than the
// std::*_distribution adaptors, whose algorithms differ between standard
// libraries, so a seed reproduces the same trace on any toolchain.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const { return seed_; }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform on {0, ..., n-1}; n must be positive.
  std::size_t below(std::size_t n);

  bool bernoulli(double p) { return uniform() < p; }

  // Index drawn from an unnormalised non-negative weight vector. The total
  // must be positive.
  std::size_t categorical(std::span<const double> weights);
  std::size_t categorical(std::span<const double> weights, double total);

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

}  // namespace avgopt

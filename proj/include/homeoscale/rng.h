#pragma once

#include <cstdint>
#include <vector>

namespace homeoscale {

// SplitMix64 output function. Also used to derive per-run and per-stream seeds.
std::uint64_t mix64(std::uint64_t x);

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index);

// Counter-based generator: draw k of stream s is mix64(s ^ mix64(k)). Any
// draw can be recomputed from (seed, counter) alone, and streams split by
// deriving a new seed.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t next_u64();
  // Uniform on (0, 1], 53-bit resolution.
  double next_unit();
  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
};

// Homogeneous Poisson spike times in [0, horizon), via exponential gaps.
std::vector<double> poisson_train(double rate, double horizon, std::uint64_t seed);

}  // namespace homeoscale

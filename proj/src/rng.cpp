#include "homeoscale/rng.h"

#include <cmath>

#include "homeoscale/errors.h"

namespace homeoscale {

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
  return mix64(mix64(base) ^ (index * 0xd1b54a32d192ed03ULL + 1));
}

std::uint64_t CounterRng::next_u64() { return mix64(seed_ ^ mix64(counter_++)); }

double CounterRng::next_unit() {
  return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
}

std::vector<double> poisson_train(double rate, double horizon, std::uint64_t seed) {
  if (rate < 0.0 || !std::isfinite(rate)) throw DomainError("poisson_train: rate must be >= 0");
  std::vector<double> times;
  if (rate == 0.0 || !(horizon > 0.0)) return times;
  times.reserve(static_cast<std::size_t>(rate * horizon * 1.1) + 16);
  CounterRng rng(seed);
  double t = 0.0;
  while (true) {
    t += -std::log(rng.next_unit()) / rate;
    if (t >= horizon) break;
    times.push_back(t);
  }
  return times;
}

}  // namespace homeoscale

#pragma once

#include <cstdint>

namespace usblnav {

/// Counter-based Gaussian noise source.
///
/// Every draw is a pure function of (seed, epoch, channel), so simulations are
/// reproducible regardless of evaluation order or concurrency.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t seed() const { return seed_; }

  /// Uniform in the open interval (0, 1).
  double uniform(std::uint64_t epoch, std::uint32_t channel,
                 std::uint32_t lane = 0) const;

  /// Standard normal deviate (Box-Muller on two independent lanes).
  double normal(std::uint64_t epoch, std::uint32_t channel) const;

 private:
  std::uint64_t seed_;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace usblnav

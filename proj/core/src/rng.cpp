#include "usblnav/rng.hpp"

#include <cmath>
#include <numbers>

namespace usblnav {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double CounterRng::uniform(std::uint64_t epoch, std::uint32_t channel,
                           std::uint32_t lane) const {
  std::uint64_t h = splitmix64(seed_);
  h = splitmix64(h ^ epoch);
  h = splitmix64(h ^ ((static_cast<std::uint64_t>(channel) << 32) | lane));
  // 53 random mantissa bits, shifted off zero.
  return (static_cast<double>(h >> 11) + 0.5) * 0x1.0p-53;
}

double CounterRng::normal(std::uint64_t epoch, std::uint32_t channel) const {
  const double u1 = uniform(epoch, channel, 0);
  const double u2 = uniform(epoch, channel, 1);
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace usblnav

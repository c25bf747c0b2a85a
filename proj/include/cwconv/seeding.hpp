#pragma once

#include <cstdint>
#include <random>

namespace cwconv {

/// splitmix64 finalizer. Used for counter-based noise so a sample is a pure
/// function of (stream, counter) and independent of the integration step.
inline std::uint64_t splitmix64(std::uint64_t x)
{
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Top 53 bits mapped to [0, 1); identical across standard libraries, unlike
/// std::uniform_real_distribution.
inline double unit_interval(std::uint64_t bits) { return static_cast<double>(bits >> 11) * 0x1.0p-53; }

inline double uniform_symmetric(std::mt19937_64& rng, double half_width)
{
  return (2.0 * unit_interval(rng()) - 1.0) * half_width;
}

}  // namespace cwconv

#pragma once

#include <cstdint>
#include <random>

namespace hfit {

using Rng = std::mt19937_64;

/// Uniform double in [0, 1) from the top 53 bits of one draw.
inline double uniform01(Rng& rng) noexcept { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline double uniform(Rng& rng, double lo, double hi) noexcept { return lo + (hi - lo) * uniform01(rng); }

/// Uniform integer in [0, n); n > 0.
inline std::size_t uniform_index(Rng& rng, std::size_t n) noexcept
{
    __extension__ using wide = unsigned __int128;
    return static_cast<std::size_t>((static_cast<wide>(rng()) * n) >> 64);
}

/// SplitMix64 finalizer; used to derive independent sub-seeds from a master
/// seed and a counter.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t counter) noexcept
{
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (counter + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

} // namespace hfit

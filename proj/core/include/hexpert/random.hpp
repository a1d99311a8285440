#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace hexpert {

using Rng = std::mt19937_64;

/// splitmix64 finalizer; used to derive independent seeded streams.
constexpr std::uint64_t mix_seed(std::uint64_t x) noexcept
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Deterministic generator for the stream identified by (seed, path...).
/// Two different paths never share state, so consumers can draw in any order.
inline Rng stream_rng(std::uint64_t seed, std::initializer_list<std::uint64_t> path)
{
    std::uint64_t h = mix_seed(seed);
    for (auto p : path)
        h = mix_seed(h ^ (p + 0x632be59bd9b4e019ULL));
    return Rng{h};
}

inline double uniform(Rng& rng, double lo, double hi)
{
    return std::uniform_real_distribution<double>{lo, hi}(rng);
}

inline double standard_normal(Rng& rng)
{
    return std::normal_distribution<double>{0.0, 1.0}(rng);
}

} // namespace hexpert

#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace cmem {

using Rng = std::mt19937_64;

namespace detail {
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}
}  // namespace detail

/**
 * @brief Derive an independent stream from a base seed and a key path.
 *
 * The same (seed, keys) always yields the same stream, and streams for
 * different keys do not depend on how many other streams were drawn.
 */
inline Rng derive_stream(std::uint64_t seed, std::initializer_list<std::uint64_t> keys) {
    std::uint64_t h = detail::splitmix64(seed);
    for (std::uint64_t k : keys) h = detail::splitmix64(h ^ detail::splitmix64(k + 0x632be59bd9b4e019ULL));
    return Rng(h);
}

}  // namespace cmem

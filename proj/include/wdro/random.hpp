#pragma once

#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <random>
#include <vector>

namespace wdro {

using Rng = std::mt19937_64;

// splitmix64 finalizer; used to derive independent, reproducible substreams.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Seed for the substream identified by `path` under `seed`. Order of the
// path components matters; the result does not depend on call order.
inline std::uint64_t substream(std::uint64_t seed, std::initializer_list<std::uint64_t> path) {
    std::uint64_t h = mix64(seed);
    for (std::uint64_t p : path) h = mix64(h ^ mix64(p + 0x632be59bd9b4e019ULL));
    return h;
}

inline Rng make_rng(std::uint64_t seed, std::initializer_list<std::uint64_t> path = {}) {
    const std::uint64_t s = substream(seed, path);
    std::seed_seq seq{static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(s >> 32)};
    return Rng(seq);
}

// `count` distinct values from [0, population), uniformly without replacement
// (partial Fisher-Yates). Returned in draw order.
inline std::vector<std::size_t> sample_without_replacement(std::size_t population, std::size_t count,
                                                           Rng& rng) {
    std::vector<std::size_t> pool(population);
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    if (count > population) count = population;
    for (std::size_t k = 0; k < count; ++k) {
        std::uniform_int_distribution<std::size_t> pick(k, population - 1);
        std::swap(pool[k], pool[pick(rng)]);
    }
    pool.resize(count);
    return pool;
}

}  // namespace wdro

#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace greenprec {

using RandomStream = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Purpose tags keep streams for different consumers of the same
// (setup, symbol) coordinate disjoint.
enum class StreamTag : std::uint64_t {
    Geometry = 1,
    Channel = 2,
    Bits = 3,
    Noise = 4,
    Acr = 5,
};

// Derives an independent stream from a master seed and a coordinate path.
// The result depends only on its arguments, never on call order or thread.
inline std::uint64_t derive_seed(std::uint64_t master_seed, StreamTag tag,
                                 std::initializer_list<std::uint64_t> path = {}) {
    std::uint64_t h = splitmix64(master_seed);
    h = splitmix64(h ^ static_cast<std::uint64_t>(tag));
    for (std::uint64_t p : path) h = splitmix64(h ^ (p + 0x632be59bd9b4e019ULL));
    return h;
}

inline RandomStream derive_stream(std::uint64_t master_seed, StreamTag tag,
                                  std::initializer_list<std::uint64_t> path = {}) {
    return RandomStream(derive_seed(master_seed, tag, path));
}

}  // namespace greenprec

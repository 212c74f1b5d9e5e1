#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

namespace hierfed {

using Rng = std::mt19937_64;

inline std::uint64_t fnv1a64(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ULL) {
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Seed for a named substream. Every random draw in the pipeline comes from
/// a substream keyed by (master seed, purpose, ids...), so results do not
/// depend on execution order or worker count.
inline std::uint64_t substream_seed(std::uint64_t master, std::string_view purpose,
                                    std::initializer_list<std::uint64_t> ids = {}) {
    std::uint64_t h = splitmix64(master ^ fnv1a64(purpose));
    for (std::uint64_t id : ids) h = splitmix64(h ^ splitmix64(id + 0x632be59bd9b4e019ULL));
    return h;
}

inline Rng make_rng(std::uint64_t master, std::string_view purpose,
                    std::initializer_list<std::uint64_t> ids = {}) {
    return Rng(substream_seed(master, purpose, ids));
}

}  // namespace hierfed

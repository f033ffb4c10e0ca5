#pragma once

#include <cstdint>
#include <random>

namespace sncp {

// splitmix64 finalizer, used to derive independent substream seeds from
// (seed, index...) tuples. Replicate b always gets the same stream no
// matter which worker evaluates it.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t seed) { return splitmix64(seed); }

template <typename... Rest>
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t head, Rest... rest) {
    return mix_seed(splitmix64(seed ^ splitmix64(head)), rest...);
}

// FNV-1a, for folding strings (cell ids) into stream seeds.
inline std::uint64_t hash_string(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

template <typename... Parts>
std::mt19937_64 stream_engine(std::uint64_t seed, Parts... parts) {
    return std::mt19937_64(mix_seed(seed, static_cast<std::uint64_t>(parts)...));
}

}  // namespace sncp

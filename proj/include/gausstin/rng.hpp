#pragma once

#include <cstdint>
#include <string_view>

namespace gausstin {

// FNV-1a over bytes. Stable across platforms, used to fold string ids into seeds.
inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// splitmix64 finalizer; decorrelates nearby seeds.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
    return splitmix64(splitmix64(a) ^ b);
}

inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
    return mix_seed(mix_seed(a, b), c);
}

// Tags for deriving independent sub-streams from one master seed.
namespace seed_tag {
inline constexpr std::uint64_t descriptor = 0xd15c;
inline constexpr std::uint64_t init_train = 0x1417;
inline constexpr std::uint64_t stage_train = 0x57a6;
inline constexpr std::uint64_t generator_fit = 0xf17f;
inline constexpr std::uint64_t generator_sample = 0x6e45;
inline constexpr std::uint64_t reservoir = 0x4e5e;
inline constexpr std::uint64_t merge_shuffle = 0x3e46;
inline constexpr std::uint64_t repetition = 0x4ef5;
inline constexpr std::uint64_t held_out = 0x4e1d;
}  // namespace seed_tag

}  // namespace gausstin

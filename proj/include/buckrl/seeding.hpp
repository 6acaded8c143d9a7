#pragma once

#include <cstdint>

namespace buckrl {

/// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Independent child seed for (stream, index) under a master seed.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t index) {
    return mix64(mix64(mix64(master) ^ stream) + index);
}

namespace streams {
inline constexpr std::uint64_t kNetInit = 1;
inline constexpr std::uint64_t kAgent = 2;
inline constexpr std::uint64_t kEpisode = 3;
inline constexpr std::uint64_t kSweepCell = 4;
inline constexpr std::uint64_t kValidation = 5;
}  // namespace streams

}  // namespace buckrl

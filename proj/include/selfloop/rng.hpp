#pragma once

#include <cstdint>
#include <random>

namespace selfloop {

using Rng = std::mt19937_64;

/// splitmix64 finalizer; used to derive independent sub-seeds from a master
/// seed so every random consumer owns a reproducible stream.
constexpr std::uint64_t mix_seed(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    return mix_seed(mix_seed(seed) ^ mix_seed(stream + 0x632be59bd9b4e019ULL));
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
    return derive_seed(derive_seed(seed, stream), index);
}

// Stream tags. Keeping them in one place prevents two consumers from
// silently sharing a generator.
namespace stream {
inline constexpr std::uint64_t kPermutationSelect = 1;
inline constexpr std::uint64_t kPermutationSample = 2;
inline constexpr std::uint64_t kRotation = 3;
inline constexpr std::uint64_t kInit = 4;
inline constexpr std::uint64_t kDropout = 5;
inline constexpr std::uint64_t kLabeledShuffle = 6;
inline constexpr std::uint64_t kUnlabeledShuffle = 7;
inline constexpr std::uint64_t kSelfLoop = 8;
inline constexpr std::uint64_t kSynthetic = 9;
inline constexpr std::uint64_t kSplit = 10;
inline constexpr std::uint64_t kEnsemble = 11;
inline constexpr std::uint64_t kCandidates = 12;
}  // namespace stream

}  // namespace selfloop

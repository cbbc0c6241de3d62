#pragma once

#include <bit>
#include <cstdint>
#include <initializer_list>

namespace agcml {

/// splitmix64 finaliser; used to derive independent child seeds.
constexpr std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> salt) {
    std::uint64_t h = mix64(base);
    for (auto s : salt) h = mix64(h ^ s);
    return h;
}

inline std::uint64_t seed_bits(double v) { return std::bit_cast<std::uint64_t>(v); }

// Fixed salts so that streams for different purposes never coincide.
inline constexpr std::uint64_t kSaltMetrics = 0x6d65747269637301ULL;
inline constexpr std::uint64_t kSaltSweep = 0x7377656570000002ULL;
inline constexpr std::uint64_t kSaltSynth = 0x73796e7468000003ULL;
inline constexpr std::uint64_t kSaltSplit = 0x73706c6974000004ULL;
inline constexpr std::uint64_t kSaltTrain = 0x747261696e000005ULL;
inline constexpr std::uint64_t kSaltPer = 0x7065720000000006ULL;

}  // namespace agcml

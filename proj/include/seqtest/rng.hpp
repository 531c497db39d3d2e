#pragma once

#include <cstdint>
#include <random>

namespace seqtest {

using Rng = std::mt19937_64;

// SplitMix64 finalizer; used to derive independent stream seeds.
constexpr std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Seed for stream `stream` of run `run` under `base`.
constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t run, std::uint64_t stream = 0) {
    return splitmix64(splitmix64(base + run) ^ (0xd1b54a32d192ed03ULL * (stream + 1)));
}

// Uniform double in [0, 1) with 53 random bits; portable across standard libraries.
inline double uniform01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace seqtest

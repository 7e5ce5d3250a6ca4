#pragma once

#include <cstdint>
#include <random>

namespace lbdp {

// splitmix64 finalizer; used to derive independent per-replicate seeds
// from a base seed so parallel schedules can't change the sampling.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream = 0,
                              std::uint64_t salt = 0) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1) + 0xbf58476d1ce4e5b9ULL * salt;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0, std::uint64_t salt = 0) {
    return Rng(mix_seed(seed, stream, salt));
}

}  // namespace lbdp

// rng.hpp - seeded random streams and seed derivation
#pragma once

#include <cstdint>
#include <random>

namespace scma {

using Rng = std::mt19937_64;

// splitmix64 finalizer; decorrelates derived seeds
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Independent stream seed for (base, stream, index). Used to give every
// Monte-Carlo chunk, sweep point and training run its own generator so
// results do not depend on evaluation order.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream, std::uint64_t index = 0) {
    return mix64(mix64(mix64(base) ^ stream) ^ index);
}

}  // namespace scma

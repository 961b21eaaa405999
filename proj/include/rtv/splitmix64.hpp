#pragma once

#include <cstdint>

namespace rtv {

// SplitMix64 (Vigna's public-domain constants). Used wherever the artifact
// needs reproducible draws: stage selection, corpus generation.
inline std::uint64_t splitmix64_next(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

// First output of a SplitMix64 stream seeded with x.
inline std::uint64_t splitmix64(std::uint64_t x) {
    return splitmix64_next(x);
}

// Small convenience stream over splitmix64_next.
class SplitMix64 {
  public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() { return splitmix64_next(state_); }

    // Uniform draw in [0, bound) by modulo; bias is irrelevant at the
    // bounds used here (single-digit moduli against a 64-bit stream).
    std::uint64_t next_below(std::uint64_t bound) { return next() % bound; }

  private:
    std::uint64_t state_;
};

}  // namespace rtv

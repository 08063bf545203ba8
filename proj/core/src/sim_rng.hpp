#pragma once

#include <cstdint>

namespace impulse::detail {

// Normals are produced in fixed-size chunks; the chunk size and the draw
// layout inside fill_normals are part of the reproducibility contract shared
// by every engine (per-step and batched), so both consume identical
// sequences for a given (seed, path index).
inline constexpr int kChunkNormals = 8192;

struct SplitMix64 {
    std::uint64_t state = 0;
    std::uint64_t next() {
        state += 0x9E3779B97F4A7C15ULL;
        std::uint64_t z = state;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }
};

struct Xoshiro256pp {
    std::uint64_t s[4] = {};

    // Independent substream for one path: the xoshiro state is seeded from a
    // splitmix64 chain keyed by (seed, path index). Deterministic and
    // order-free, so scheduling never affects results.
    static Xoshiro256pp for_path(std::uint64_t seed, long long path_index) {
        SplitMix64 mix{seed + 0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(path_index + 1)};
        Xoshiro256pp rng;
        for (auto& word : rng.s) word = mix.next();
        return rng;
    }

    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    std::uint64_t next() {
        const std::uint64_t result = rotl(s[0] + s[3], 23) + s[0];
        const std::uint64_t t = s[1] << 17;
        s[2] ^= s[0];
        s[3] ^= s[1];
        s[1] ^= s[2];
        s[0] ^= s[3];
        s[2] ^= t;
        s[3] = rotl(s[3], 45);
        return result;
    }
};

// Fills z[0..n) with standard normals, n <= kChunkNormals.
//
// Pairwise Box-Muller evaluated in split array passes so the transcendental
// calls vectorize. Layout contract: with p = (n+1)/2 pairs, pair i consumes
// two generator words (u1 in (0,1], then u2 in [0,1)); the outputs are
// z[i] = r_i cos(2 pi u2_i) for i < p and z[p+j] = r_j sin(2 pi u2_j) for
// j < n-p, where r_i = sqrt(-2 ln u1_i).
void fill_normals(Xoshiro256pp& rng, double* z, int n);

}  // namespace impulse::detail

#pragma once

// Deterministic randomness for the whole pipeline. Everything that consumes
// randomness takes an explicit 64-bit seed and draws from this generator, so
// datasets, crops and noise fields replay bit-identically on any platform.
//
// Generator contract (tests replay it by hand, keep it frozen):
//   state' = state + 0x9E3779B97F4A7C15
//   z = state'; z = (z ^ z>>30) * 0xBF58476D1CE4E5B9
//   z = (z ^ z>>27) * 0x94D049BB133111EB; out = z ^ z>>31        (splitmix64)
//   below(n)    = next() % n
//   uniform()   = (next() >> 11) * 2^-53                 in [0,1)
//   gaussian()  = sqrt(-2 ln u1) * cos(2 pi u2),
//                 u1 = ((next() >> 11) + 1) * 2^-53      in (0,1]
//                 u2 = (next() >> 11) * 2^-53
//   derive_seed(parent, k) = one splitmix64 output with
//                 state = parent + (k + 1) * 0x9E3779B97F4A7C15

#include <cmath>
#include <cstdint>

namespace hirqa {

inline std::uint64_t splitmix64_next(std::uint64_t& state) {
    state += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

class Rng {
  public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() { return splitmix64_next(state_); }

    // Modulo draw; bias is irrelevant at the ranges used here (n << 2^64).
    std::uint64_t below(std::uint64_t n) { return next() % n; }

    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double gaussian() {
        double u1 = (static_cast<double>(next() >> 11) + 1.0) * 0x1.0p-53;
        double u2 = static_cast<double>(next() >> 11) * 0x1.0p-53;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
    }

  private:
    std::uint64_t state_;
};

inline std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t stream) {
    std::uint64_t s = parent + (stream + 1) * 0x9E3779B97F4A7C15ULL;
    return splitmix64_next(s);
}

// 64-bit FNV-1a. Keyed token hashing for prompt embeddings; the constants are
// part of the file-format contract.
inline std::uint64_t fnv1a64(const void* data, std::size_t n) {
    const unsigned char* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = 14695981039346656037ULL;
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 1099511628211ULL;
    }
    return h;
}

} // namespace hirqa

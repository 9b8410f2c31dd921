#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace odefit {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

inline std::uint64_t fnv1a(std::string_view text) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

// Named sub-seed: independent streams for sampler, noise, corruption, shuffle.
inline std::uint64_t derive_seed(std::uint64_t base, std::string_view label) {
    return splitmix64(base ^ splitmix64(fnv1a(label)));
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
    return splitmix64(base + splitmix64(index + 0x632BE59BD9B4E019ull));
}

// uniform in [0,1) with 53 random bits; avoids distribution-object state.
inline double uniform01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace odefit

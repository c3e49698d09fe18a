#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace recoeval::detail {

// Portable draws on top of mt19937_64; std distributions are implementation-defined.
inline double uniform01(std::mt19937_64& gen) {
    return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

inline double uniform(std::mt19937_64& gen, double lo, double hi) {
    return lo + (hi - lo) * uniform01(gen);
}

// Uniform integer in [0, n) by multiply-shift on 64 bits.
inline std::uint64_t below(std::uint64_t x, std::uint64_t n) {
    return static_cast<std::uint64_t>((static_cast<unsigned __int128>(x) * n) >> 64);
}

inline std::uint64_t below(std::mt19937_64& gen, std::uint64_t n) { return below(gen(), n); }

inline double normal(std::mt19937_64& gen) {
    const double u1 = 1.0 - uniform01(gen);  // (0, 1]
    const double u2 = uniform01(gen);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

inline std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 0xCBF29CE484222325ULL) {
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

// Fisher-Yates with the portable draw.
template <class It>
void shuffle(It first, It last, std::mt19937_64& gen) {
    const auto n = static_cast<std::uint64_t>(last - first);
    for (std::uint64_t k = n; k > 1; --k) {
        const auto j = below(gen, k);
        std::swap(first[k - 1], first[j]);
    }
}

}  // namespace recoeval::detail

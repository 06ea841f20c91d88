#pragma once

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace biolabel::util {

// std::mt19937_64 output is fixed by the standard; the std distributions are
// not, so the draws below are written out to keep results portable.
using Rng = std::mt19937_64;

/// Uniform integer in [0, n). n must be positive.
inline std::uint64_t uniform_below(Rng& rng, std::uint64_t n) {
    const std::uint64_t threshold = (0 - n) % n;  // 2^64 mod n
    std::uint64_t x;
    do {
        x = rng();
    } while (x < threshold);
    return x % n;
}

/// Uniform double in [0, 1).
inline double uniform_unit(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

template <class T>
void shuffle(std::vector<T>& v, Rng& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        std::swap(v[i - 1], v[uniform_below(rng, i)]);
    }
}

}  // namespace biolabel::util

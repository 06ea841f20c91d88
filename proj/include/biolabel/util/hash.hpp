#pragma once

#include <cstdint>
#include <string_view>

namespace biolabel::util {

inline constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;

/// 64-bit FNV-1a, continuing from `h`.
inline std::uint64_t fnv1a(std::uint64_t h, std::string_view bytes) {
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::uint64_t fnv1a(std::string_view bytes) { return fnv1a(kFnvOffset, bytes); }

}  // namespace biolabel::util

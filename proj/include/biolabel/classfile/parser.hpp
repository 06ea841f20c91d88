#pragma once

#include "biolabel/classfile/model.hpp"

#include <cstdint>
#include <span>

namespace biolabel::classfile {

inline constexpr std::uint32_t kClassMagic = 0xCAFEBABE;
inline constexpr unsigned kMinMajorVersion = 45;
inline constexpr unsigned kMaxMajorVersion = 65;

/// Parses one class file. Constant-pool references are resolved into names
/// and descriptors; attributes other than Code are skipped.
///
/// Throws MalformedClassFile (with the byte offset of the problem) or
/// UnsupportedVersion. Never reads outside `bytes`.
ClassModel parse_class(std::span<const std::uint8_t> bytes);

}  // namespace biolabel::classfile

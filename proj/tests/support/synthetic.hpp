#pragma once

#include <cstdint>
#include <vector>

namespace biolabel::testing {

/// Stored zip of `classes` classes with `methods_per_class` trivial methods
/// each (identity functions and empty void methods with varied names).
std::vector<std::uint8_t> synthetic_archive(std::size_t classes, std::size_t methods_per_class);

}  // namespace biolabel::testing

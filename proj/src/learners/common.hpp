#pragma once

#include "biolabel/learners/learners.hpp"

#include <optional>
#include <string>

namespace biolabel::learners::detail {

/// A constant model with a warning when `label` is all-positive or
/// all-negative in `m` (or `m` is empty).
inline std::optional<TrainResult> degenerate(const TrainingMatrix& m, Label label) {
    const auto pos = m.positives(label);
    if (pos != 0 && pos != m.size()) return std::nullopt;
    return TrainResult{ConstantModel{pos != 0}, "label " + std::string(groundtruth::label_name(label)) +
                                                   (pos ? " has no negative" : " has no positive") +
                                                   " training examples; using a constant classifier"};
}

}  // namespace biolabel::learners::detail

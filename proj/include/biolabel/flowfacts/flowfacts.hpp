#pragma once

#include "biolabel/classfile/model.hpp"

#include <cstdint>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace biolabel::flowfacts {

/// Where a value on the operand stack or in a local slot may have come from.
struct Origin {
    enum class Tag : std::uint8_t { Param, Field, Other };

    Tag tag = Tag::Other;
    std::uint32_t param = 0;  // Param: 0-based position, receiver is 0
    std::string field;        // Field: "owner.name"

    static Origin of_param(std::uint32_t index) { return {Tag::Param, index, {}}; }
    static Origin of_field(std::string id) { return {Tag::Field, 0, std::move(id)}; }
    static Origin other() { return {}; }

    auto operator<=>(const Origin&) const = default;
};

struct FlowFacts {
    std::set<std::uint32_t> params_to_return;
    std::set<std::pair<std::uint32_t, std::string>> params_to_field;
    std::set<std::string> fields_to_return;

    bool empty() const noexcept {
        return params_to_return.empty() && params_to_field.empty() && fields_to_return.empty();
    }
    bool operator==(const FlowFacts&) const = default;
};

/// True when every fact of `sub` is also in `super`.
bool is_subset(const FlowFacts& sub, const FlowFacts& super);

/// Intra-procedural fixpoint over operand-stack and local-slot origin sets,
/// merged by union at joins. Invocation results carry no origin (the callee
/// is not analysed). Methods without code give empty facts.
///
/// Throws FlowAnalysisError on stack underflow or mismatched stack depths at
/// a join.
FlowFacts analyze_flows_checked(const classfile::MethodModel& method);

/// Same as analyze_flows_checked, but malformed bytecode yields empty facts
/// and, when `warnings` is given, one message appended to it.
FlowFacts analyze_flows(const classfile::MethodModel& method,
                        std::vector<std::string>* warnings = nullptr);

}  // namespace biolabel::flowfacts

#pragma once

#include "biolabel/classfile/descriptor.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace biolabel::classfile {

// Stack effects below are counted in JVM words: long and double values
// occupy two operand-stack slots, everything else one.

struct Load {
    std::uint16_t slot = 0;
    std::uint8_t words = 1;
};

struct Store {
    std::uint16_t slot = 0;
    std::uint8_t words = 1;
};

enum class InvokeKind : std::uint8_t { Virtual, Special, Static, Interface, Dynamic };

/// Owner name used for invokedynamic call sites.
inline constexpr std::string_view kIndyOwner = "<indy>";

struct Invoke {
    InvokeKind kind = InvokeKind::Virtual;
    std::string owner;  // dotted, or kIndyOwner
    std::string name;
    MethodDescriptor descriptor;

    bool has_receiver() const noexcept {
        return kind != InvokeKind::Static && kind != InvokeKind::Dynamic;
    }
};

struct FieldAccess {
    std::string owner;  // dotted
    std::string name;
    TypeRef type;
    bool is_static = false;

    std::string id() const { return owner + "." + name; }
};

struct FieldGet : FieldAccess {};
struct FieldPut : FieldAccess {};

struct Return {
    bool has_value = false;
    std::uint8_t words = 0;
};

/// Control transfer. `falls_through` is false for goto, switches and ret.
/// jsr pushes a return address and is modelled with push_words = 1.
struct Branch {
    std::vector<std::uint32_t> targets;
    std::uint8_t pop_words = 0;
    std::uint8_t push_words = 0;
    bool falls_through = true;
    bool is_ret = false;
};

struct Const {
    std::uint8_t words = 1;
};

enum class StackEffect : std::uint8_t { Pop, Pop2, Dup, DupX1, DupX2, Dup2, Dup2X1, Dup2X2, Swap };

struct StackOp {
    StackEffect effect = StackEffect::Pop;
};

/// Any other instruction. Produced words carry the union of consumed origins.
struct Other {
    std::uint16_t pop_words = 0;
    std::uint16_t push_words = 0;
    bool terminates = false;  // athrow
};

using InstructionKind =
    std::variant<Load, Store, Invoke, FieldGet, FieldPut, Return, Branch, Const, StackOp, Other>;

struct Instruction {
    std::uint32_t offset = 0;
    std::uint8_t opcode = 0;
    InstructionKind kind;

    /// Whether control can continue to the next instruction in sequence.
    bool falls_through() const noexcept;
};

struct ExceptionHandler {
    std::uint32_t start = 0;  // inclusive
    std::uint32_t end = 0;    // exclusive
    std::uint32_t handler = 0;
    std::string catch_type;   // dotted; empty for catch-all
};

namespace access {
inline constexpr std::uint16_t kStatic = 0x0008;
inline constexpr std::uint16_t kNative = 0x0100;
inline constexpr std::uint16_t kAbstract = 0x0400;
}  // namespace access

struct MethodModel {
    std::string owner;  // dotted binary name of the declaring class
    std::string name;
    MethodDescriptor descriptor;
    std::string raw_descriptor;
    std::uint16_t access_flags = 0;
    bool is_abstract_or_native = false;
    std::uint16_t max_stack = 0;
    std::uint16_t max_locals = 0;
    std::vector<Instruction> instructions;
    std::vector<ExceptionHandler> handlers;

    bool is_static() const noexcept { return (access_flags & access::kStatic) != 0; }
    /// Parameter positions including the receiver of instance methods.
    std::size_t parameter_count() const noexcept {
        return descriptor.params.size() + (is_static() ? 0 : 1);
    }
    /// Index into `instructions` of the instruction at `offset`, if any.
    std::optional<std::size_t> index_of(std::uint32_t offset) const;
};

struct ClassModel {
    std::string binary_name;  // dotted, `$` kept for nested classes
    std::optional<std::string> super_name;
    std::uint16_t major_version = 0;
    std::uint16_t access_flags = 0;
    std::vector<MethodModel> methods;
    std::string source_archive;
    std::string source_entry;
};

}  // namespace biolabel::classfile

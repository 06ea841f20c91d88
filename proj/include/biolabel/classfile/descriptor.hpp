#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace biolabel::classfile {

enum class Primitive : std::uint8_t { Byte, Char, Double, Float, Int, Long, Short, Boolean };

inline constexpr Primitive kAllPrimitives[] = {Primitive::Byte,  Primitive::Char,
                                               Primitive::Double, Primitive::Float,
                                               Primitive::Int,   Primitive::Long,
                                               Primitive::Short, Primitive::Boolean};

char primitive_tag(Primitive p) noexcept;
std::string_view primitive_name(Primitive p) noexcept;
std::optional<Primitive> primitive_from_tag(char tag) noexcept;
std::optional<Primitive> primitive_from_name(std::string_view name) noexcept;

/// A JVM field type: a primitive or a class, optionally wrapped in array
/// dimensions. Class names are kept in internal form (`java/lang/String`)
/// so rendering back to a descriptor is lossless.
struct TypeRef {
    enum class Kind : std::uint8_t { Primitive, Object };

    Kind element_kind = Kind::Primitive;
    Primitive primitive = Primitive::Int;
    std::string internal_name;  // Object elements only.
    std::uint8_t dimensions = 0;

    static TypeRef of(Primitive p, std::uint8_t dims = 0);
    static TypeRef object(std::string internal_name, std::uint8_t dims = 0);

    bool is_array() const noexcept { return dimensions > 0; }
    bool is_primitive() const noexcept {
        return dimensions == 0 && element_kind == Kind::Primitive;
    }
    bool is_object() const noexcept { return dimensions == 0 && element_kind == Kind::Object; }

    /// Operand-stack / local-slot width: 2 for long and double, else 1.
    unsigned words() const noexcept;

    /// Dotted element class name (`java.lang.String`); empty for primitives.
    std::string element_class_name() const;
    /// Unqualified element name: `BiometricPrompt$CryptoObject`, `int`.
    std::string simple_name() const;

    std::string descriptor() const;
    /// Source-style rendering: `int`, `java.lang.String[]`.
    std::string java_name() const;

    friend bool operator==(const TypeRef&, const TypeRef&) = default;
};

struct MethodDescriptor {
    std::vector<TypeRef> params;
    std::optional<TypeRef> return_type;  // nullopt is void.

    bool returns_void() const noexcept { return !return_type.has_value(); }
    /// Total parameter words, excluding any receiver.
    unsigned param_words() const noexcept;
    std::string render() const;

    friend bool operator==(const MethodDescriptor&, const MethodDescriptor&) = default;
};

/// Parses a method descriptor such as `(IJ[Ljava/lang/String;)Z`.
/// Throws DescriptorSyntax carrying the index of the first bad character.
MethodDescriptor parse_method_descriptor(std::string_view raw);

/// Parses a single field descriptor (`I`, `[Ljava/lang/Object;`).
TypeRef parse_field_descriptor(std::string_view raw);

/// Parses a source-style type name as written in ground-truth records
/// (`byte[]`, `android.os.CancellationSignal`). Returns nullopt for `void`.
/// Throws DescriptorSyntax on an empty or malformed name.
std::optional<TypeRef> parse_java_type(std::string_view name);

/// `void` for nullopt, otherwise TypeRef::java_name().
std::string java_type_name(const std::optional<TypeRef>& type);

}  // namespace biolabel::classfile

#pragma once

#include "biolabel/classfile/model.hpp"
#include "biolabel/features/lexicon.hpp"
#include "biolabel/flowfacts/flowfacts.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace biolabel::features {

enum class FeatureType : std::uint8_t {
    ClassNameStarts,
    ClassNameContains,
    ClassNameEnds,
    MethodNameStarts,
    MethodNameContains,
    MethodNameEnds,
    ReturnsVoid,
    ReturnsPrimitive,
    ReturnTypeContains,
    ParamCountIs,
    HasPrimitiveParam,
    ParamTypeContains,
    CalleeNameStarts,
    CalleeNameContains,
    CalleeNameEnds,
    CalleeReturnTypeContains,
    CalleeParamTypeContains,
    FlowParamToReturn,
    FlowParamToField,
    FlowFieldToReturn,
};

inline constexpr std::size_t kFeatureTypeCount = 20;

std::string_view feature_type_name(FeatureType t) noexcept;
std::optional<FeatureType> feature_type_from_name(std::string_view name) noexcept;

struct FeatureInstance {
    FeatureType type = FeatureType::ReturnsVoid;
    std::string argument;  // empty for ReturnsVoid and the flow types
    std::size_t id = 0;

    /// Readable form, e.g. `CalleeNameStarts(check)`.
    std::string display() const;
};

class Catalog {
public:
    Catalog() = default;

    const std::vector<FeatureInstance>& instances() const noexcept { return instances_; }
    std::size_t size() const noexcept { return instances_.size(); }
    const FeatureInstance& operator[](std::size_t i) const { return instances_[i]; }
    /// FNV-1a over the ordered (type, argument) list.
    std::uint64_t id() const noexcept { return id_; }
    std::string id_hex() const;

    std::optional<std::size_t> find(FeatureType type, std::string_view argument = {}) const;

    /// JSON array of {id, feature_type, argument}.
    std::string to_json() const;

private:
    friend Catalog build_catalog(const Lexicon& lexicon);
    std::vector<FeatureInstance> instances_;
    std::uint64_t id_ = 0;
};

/// Cross product of feature types with their arguments, in FeatureType
/// order and lexicon order within a type. Throws EmptyLexicon.
Catalog build_catalog(const Lexicon& lexicon);

/// A method invoked by the subject. The descriptor is known for bytecode
/// callees and for ground-truth entries written as `owner.name(desc)ret`.
struct Callee {
    std::string owner;  // dotted
    std::string name;
    std::optional<classfile::MethodDescriptor> descriptor;
};

/// Everything the feature predicates look at. Built either from bytecode or
/// from a ground-truth record, so training and scanning share one evaluator.
struct FeatureSubject {
    std::string class_name;  // dotted, fully qualified
    std::string method_name;
    std::optional<classfile::TypeRef> return_type;  // nullopt is void
    std::vector<classfile::TypeRef> params;        // declared; receiver excluded
    std::vector<Callee> callees;
    bool flow_param_to_return = false;
    bool flow_param_to_field = false;
    bool flow_field_to_return = false;

    static FeatureSubject of(const classfile::MethodModel& method, const flowfacts::FlowFacts& flows);
};

/// Lowercase camelCase/underscore/`$` tokens: `onAuthenticationError` ->
/// on, authentication, error; `HTTPServer2` -> http, server2.
std::vector<std::string> name_tokens(std::string_view name);

/// Token-boundary prefix/suffix match: the keyword equals the concatenation
/// of the first (last) k tokens for some k.
bool starts_with_tokens(const std::vector<std::string>& tokens, std::string_view keyword);
bool ends_with_tokens(const std::vector<std::string>& tokens, std::string_view keyword);

bool evaluate(const FeatureInstance& instance, const FeatureSubject& subject);
bool evaluate(const FeatureInstance& instance, const classfile::MethodModel& method,
              const flowfacts::FlowFacts& flows);

class FeatureVector {
public:
    FeatureVector() = default;
    FeatureVector(std::uint64_t catalog_id, std::size_t size)
        : catalog_id_(catalog_id), size_(size), words_((size + 63) / 64, 0) {}

    std::uint64_t catalog_id() const noexcept { return catalog_id_; }
    std::size_t size() const noexcept { return size_; }
    bool test(std::size_t i) const noexcept { return (words_[i / 64] >> (i % 64)) & 1u; }
    bool operator[](std::size_t i) const noexcept { return test(i); }
    void set(std::size_t i, bool value = true) noexcept {
        const std::uint64_t bit = std::uint64_t{1} << (i % 64);
        words_[i / 64] = value ? (words_[i / 64] | bit) : (words_[i / 64] & ~bit);
    }
    std::size_t count() const noexcept;
    /// Indices of set bits, ascending.
    std::vector<std::uint32_t> ones() const;
    const std::vector<std::uint64_t>& words() const noexcept { return words_; }

    bool operator==(const FeatureVector&) const = default;

private:
    std::uint64_t catalog_id_ = 0;
    std::size_t size_ = 0;
    std::vector<std::uint64_t> words_;
};

/// Throws CatalogMismatch unless `v` was produced by `catalog`.
void require_catalog(const FeatureVector& v, std::uint64_t catalog_id);

FeatureVector vectorize(const FeatureSubject& subject, const Catalog& catalog);
FeatureVector vectorize(const classfile::MethodModel& method, const flowfacts::FlowFacts& flows,
                        const Catalog& catalog);

}  // namespace biolabel::features

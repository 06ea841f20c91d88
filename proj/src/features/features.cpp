#include "biolabel/features/features.hpp"
#include "biolabel/util/hash.hpp"

#include "biolabel/error.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <bit>
#include <cctype>
#include <cstdio>

namespace biolabel::features {

using classfile::MethodModel;
using classfile::Primitive;
using classfile::TypeRef;

namespace {

constexpr std::array<std::string_view, kFeatureTypeCount> kTypeNames = {
    "ClassNameStarts",    "ClassNameContains",        "ClassNameEnds",
    "MethodNameStarts",   "MethodNameContains",       "MethodNameEnds",
    "ReturnsVoid",        "ReturnsPrimitive",         "ReturnTypeContains",
    "ParamCountIs",       "HasPrimitiveParam",        "ParamTypeContains",
    "CalleeNameStarts",   "CalleeNameContains",       "CalleeNameEnds",
    "CalleeReturnTypeContains", "CalleeParamTypeContains", "FlowParamToReturn",
    "FlowParamToField",   "FlowFieldToReturn",
};

std::string lower(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

std::string_view after_last_dot(std::string_view s) {
    const auto dot = s.rfind('.');
    return dot == std::string_view::npos ? s : s.substr(dot + 1);
}

std::string type_surface(const TypeRef& t) { return lower(t.simple_name()); }

// An instance with its argument lowercased and pre-parsed.
struct Compiled {
    FeatureType type;
    std::string arg;
    std::optional<Primitive> primitive;
    std::optional<ParamBucket> bucket;
};

Compiled compile(const FeatureInstance& f) {
    Compiled c{f.type, lower(f.argument), std::nullopt, std::nullopt};
    if (f.type == FeatureType::ReturnsPrimitive || f.type == FeatureType::HasPrimitiveParam) {
        c.primitive = classfile::primitive_from_name(f.argument);
    } else if (f.type == FeatureType::ParamCountIs) {
        c.bucket = ParamBucket::parse(f.argument);
    }
    return c;
}

const std::vector<Compiled>& compiled_for(const Catalog& catalog) {
    // Catalogs are immutable and few; cache by id so vectorize does no parsing.
    thread_local std::uint64_t cached_id = 0;
    thread_local std::vector<Compiled> cached;
    if (cached_id != catalog.id() || cached.size() != catalog.size()) {
        cached.clear();
        for (const auto& f : catalog.instances()) cached.push_back(compile(f));
        cached_id = catalog.id();
    }
    return cached;
}

struct PreparedCallee {
    std::vector<std::string> name_tokens;
    std::string qualified;  // owner.name, lowercased
    std::optional<std::string> return_surface;  // set when the callee returns a value
    std::vector<std::string> param_surfaces;
};

// Lowercased and tokenized views of a subject, computed once per vectorize.
struct Prepared {
    std::string class_qualified;
    std::vector<std::string> class_tokens;
    std::string method_lower;
    std::vector<std::string> method_tokens;
    const FeatureSubject* subject;
    std::optional<std::string> return_surface;
    std::vector<std::string> param_surfaces;
    std::vector<PreparedCallee> callees;

    explicit Prepared(const FeatureSubject& s)
        : class_qualified(lower(s.class_name)),
          class_tokens(name_tokens(after_last_dot(s.class_name))),
          method_lower(lower(s.method_name)),
          method_tokens(name_tokens(s.method_name)),
          subject(&s) {
        if (s.return_type) return_surface = type_surface(*s.return_type);
        for (const auto& p : s.params) param_surfaces.push_back(type_surface(p));
        for (const auto& c : s.callees) {
            PreparedCallee pc;
            pc.name_tokens = name_tokens(c.name);
            pc.qualified = lower(c.owner.empty() ? c.name : c.owner + "." + c.name);
            if (c.descriptor) {
                if (c.descriptor->return_type) pc.return_surface = type_surface(*c.descriptor->return_type);
                for (const auto& p : c.descriptor->params) pc.param_surfaces.push_back(type_surface(p));
            }
            callees.push_back(std::move(pc));
        }
    }
};

bool contains(const std::string& haystack, const std::string& needle) {
    return haystack.find(needle) != std::string::npos;
}

bool any_contains(const std::vector<std::string>& haystacks, const std::string& needle) {
    return std::any_of(haystacks.begin(), haystacks.end(),
                       [&](const std::string& h) { return contains(h, needle); });
}

bool eval(const Compiled& c, const Prepared& p) {
    const FeatureSubject& s = *p.subject;
    switch (c.type) {
        case FeatureType::ClassNameStarts: return starts_with_tokens(p.class_tokens, c.arg);
        case FeatureType::ClassNameContains: return contains(p.class_qualified, c.arg);
        case FeatureType::ClassNameEnds: return ends_with_tokens(p.class_tokens, c.arg);
        case FeatureType::MethodNameStarts: return starts_with_tokens(p.method_tokens, c.arg);
        case FeatureType::MethodNameContains: return contains(p.method_lower, c.arg);
        case FeatureType::MethodNameEnds: return ends_with_tokens(p.method_tokens, c.arg);
        case FeatureType::ReturnsVoid: return !s.return_type.has_value();
        case FeatureType::ReturnsPrimitive:
            return c.primitive && s.return_type && s.return_type->is_primitive() &&
                   s.return_type->primitive == *c.primitive;
        case FeatureType::ReturnTypeContains: return p.return_surface && contains(*p.return_surface, c.arg);
        case FeatureType::ParamCountIs: return c.bucket && c.bucket->contains(s.params.size());
        case FeatureType::HasPrimitiveParam:
            return c.primitive && std::any_of(s.params.begin(), s.params.end(), [&](const TypeRef& t) {
                       return t.is_primitive() && t.primitive == *c.primitive;
                   });
        case FeatureType::ParamTypeContains: return any_contains(p.param_surfaces, c.arg);
        case FeatureType::CalleeNameStarts:
            return std::any_of(p.callees.begin(), p.callees.end(),
                               [&](const PreparedCallee& k) { return starts_with_tokens(k.name_tokens, c.arg); });
        case FeatureType::CalleeNameContains:
            return std::any_of(p.callees.begin(), p.callees.end(),
                               [&](const PreparedCallee& k) { return contains(k.qualified, c.arg); });
        case FeatureType::CalleeNameEnds:
            return std::any_of(p.callees.begin(), p.callees.end(),
                               [&](const PreparedCallee& k) { return ends_with_tokens(k.name_tokens, c.arg); });
        case FeatureType::CalleeReturnTypeContains:
            return std::any_of(p.callees.begin(), p.callees.end(), [&](const PreparedCallee& k) {
                return k.return_surface && contains(*k.return_surface, c.arg);
            });
        case FeatureType::CalleeParamTypeContains:
            return std::any_of(p.callees.begin(), p.callees.end(),
                               [&](const PreparedCallee& k) { return any_contains(k.param_surfaces, c.arg); });
        case FeatureType::FlowParamToReturn: return s.flow_param_to_return;
        case FeatureType::FlowParamToField: return s.flow_param_to_field;
        case FeatureType::FlowFieldToReturn: return s.flow_field_to_return;
    }
    return false;
}

}  // namespace

std::string_view feature_type_name(FeatureType t) noexcept {
    return kTypeNames[static_cast<std::size_t>(t)];
}

std::optional<FeatureType> feature_type_from_name(std::string_view name) noexcept {
    for (std::size_t i = 0; i < kTypeNames.size(); ++i) {
        if (kTypeNames[i] == name) return static_cast<FeatureType>(i);
    }
    return std::nullopt;
}

std::string FeatureInstance::display() const {
    return std::string(feature_type_name(type)) + "(" + argument + ")";
}

std::string Catalog::id_hex() const {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(id_));
    return buf;
}

std::optional<std::size_t> Catalog::find(FeatureType type, std::string_view argument) const {
    for (const auto& f : instances_) {
        if (f.type == type && f.argument == argument) return f.id;
    }
    return std::nullopt;
}

std::string Catalog::to_json() const {
    nlohmann::ordered_json out = nlohmann::ordered_json::array();
    for (const auto& f : instances_) {
        nlohmann::ordered_json e;
        e["id"] = f.id;
        e["feature_type"] = feature_type_name(f.type);
        e["argument"] = f.argument.empty() ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(f.argument);
        out.push_back(std::move(e));
    }
    return out.dump(1);
}

Catalog build_catalog(const Lexicon& lexicon) {
    lexicon.validate();
    Catalog c;
    auto add = [&](FeatureType t, std::string arg) {
        c.instances_.push_back({t, std::move(arg), c.instances_.size()});
    };
    using T = FeatureType;
    for (std::size_t ti = 0; ti < kFeatureTypeCount; ++ti) {
        const auto t = static_cast<T>(ti);
        switch (t) {
            case T::ClassNameStarts:
            case T::ClassNameContains:
            case T::ClassNameEnds:
            case T::MethodNameStarts:
            case T::MethodNameContains:
            case T::MethodNameEnds:
            case T::CalleeNameStarts:
            case T::CalleeNameContains:
            case T::CalleeNameEnds:
                for (const auto& k : lexicon.keywords) add(t, k);
                break;
            case T::ReturnTypeContains:
            case T::ParamTypeContains:
            case T::CalleeReturnTypeContains:
            case T::CalleeParamTypeContains:
                for (const auto& k : lexicon.type_keywords) add(t, k);
                break;
            case T::ReturnsPrimitive:
            case T::HasPrimitiveParam:
                for (const auto p : lexicon.primitives) add(t, std::string(classfile::primitive_name(p)));
                break;
            case T::ParamCountIs:
                for (const auto& b : lexicon.param_buckets) add(t, b.label());
                break;
            case T::ReturnsVoid:
            case T::FlowParamToReturn:
            case T::FlowParamToField:
            case T::FlowFieldToReturn:
                add(t, {});
                break;
        }
    }
    std::uint64_t h = util::kFnvOffset;
    for (const auto& f : c.instances_) {
        h = util::fnv1a(h, feature_type_name(f.type));
        h = util::fnv1a(h, "\x1f");
        h = util::fnv1a(h, f.argument);
        h = util::fnv1a(h, "\x1e");
    }
    c.id_ = h;
    return c;
}

FeatureSubject FeatureSubject::of(const MethodModel& method, const flowfacts::FlowFacts& flows) {
    FeatureSubject s;
    s.class_name = method.owner;
    s.method_name = method.name;
    s.return_type = method.descriptor.return_type;
    s.params = method.descriptor.params;
    for (const auto& insn : method.instructions) {
        if (const auto* inv = std::get_if<classfile::Invoke>(&insn.kind)) {
            s.callees.push_back({inv->owner, inv->name, inv->descriptor});
        }
    }
    s.flow_param_to_return = !flows.params_to_return.empty();
    s.flow_param_to_field = !flows.params_to_field.empty();
    s.flow_field_to_return = !flows.fields_to_return.empty();
    return s;
}

std::vector<std::string> name_tokens(std::string_view name) {
    std::vector<std::string> out;
    std::string cur;
    auto flush = [&] {
        if (!cur.empty()) out.push_back(std::move(cur));
        cur.clear();
    };
    auto is_upper = [](char c) { return std::isupper(static_cast<unsigned char>(c)) != 0; };
    auto is_lower = [](char c) { return std::islower(static_cast<unsigned char>(c)) != 0; };
    auto is_digit = [](char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; };
    for (std::size_t i = 0; i < name.size(); ++i) {
        const char c = name[i];
        if (!is_upper(c) && !is_lower(c) && !is_digit(c)) {
            flush();
            continue;
        }
        if (is_upper(c) && i > 0) {
            const char prev = name[i - 1];
            const bool after_lower = is_lower(prev) || is_digit(prev);
            const bool acronym_end = is_upper(prev) && i + 1 < name.size() && is_lower(name[i + 1]);
            if (after_lower || acronym_end) flush();
        }
        cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    flush();
    return out;
}

bool starts_with_tokens(const std::vector<std::string>& tokens, std::string_view keyword) {
    std::size_t matched = 0;
    for (const auto& t : tokens) {
        if (keyword.substr(matched, t.size()) != t) return false;
        matched += t.size();
        if (matched == keyword.size()) return true;
    }
    return false;
}

bool ends_with_tokens(const std::vector<std::string>& tokens, std::string_view keyword) {
    std::size_t remaining = keyword.size();
    for (auto it = tokens.rbegin(); it != tokens.rend(); ++it) {
        if (it->size() > remaining || keyword.substr(remaining - it->size(), it->size()) != *it) return false;
        remaining -= it->size();
        if (remaining == 0) return true;
    }
    return false;
}

bool evaluate(const FeatureInstance& instance, const FeatureSubject& subject) {
    return eval(compile(instance), Prepared(subject));
}

bool evaluate(const FeatureInstance& instance, const MethodModel& method, const flowfacts::FlowFacts& flows) {
    return evaluate(instance, FeatureSubject::of(method, flows));
}

std::size_t FeatureVector::count() const noexcept {
    std::size_t n = 0;
    for (auto w : words_) n += static_cast<std::size_t>(std::popcount(w));
    return n;
}

std::vector<std::uint32_t> FeatureVector::ones() const {
    std::vector<std::uint32_t> out;
    for (std::size_t w = 0; w < words_.size(); ++w) {
        std::uint64_t bits = words_[w];
        while (bits) {
            out.push_back(static_cast<std::uint32_t>(w * 64 + static_cast<std::size_t>(std::countr_zero(bits))));
            bits &= bits - 1;
        }
    }
    return out;
}

void require_catalog(const FeatureVector& v, std::uint64_t catalog_id) {
    if (v.catalog_id() != catalog_id) {
        auto hex = [](std::uint64_t x) {
            char buf[17];
            std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(x));
            return std::string(buf);
        };
        throw CatalogMismatch(hex(catalog_id), hex(v.catalog_id()));
    }
}

FeatureVector vectorize(const FeatureSubject& subject, const Catalog& catalog) {
    const Prepared prepared(subject);
    const auto& compiled = compiled_for(catalog);
    FeatureVector v(catalog.id(), catalog.size());
    for (std::size_t i = 0; i < compiled.size(); ++i) {
        if (eval(compiled[i], prepared)) v.set(i);
    }
    return v;
}

FeatureVector vectorize(const MethodModel& method, const flowfacts::FlowFacts& flows, const Catalog& catalog) {
    return vectorize(FeatureSubject::of(method, flows), catalog);
}

}  // namespace biolabel::features

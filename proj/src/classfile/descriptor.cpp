#include "biolabel/classfile/descriptor.hpp"

#include "biolabel/error.hpp"

#include <algorithm>

namespace biolabel::classfile {

namespace {

constexpr std::size_t kMaxDimensions = 255;

struct PrimitiveInfo {
    Primitive primitive;
    char tag;
    std::string_view name;
};

constexpr PrimitiveInfo kPrimitiveTable[] = {
    {Primitive::Byte, 'B', "byte"},   {Primitive::Char, 'C', "char"},
    {Primitive::Double, 'D', "double"}, {Primitive::Float, 'F', "float"},
    {Primitive::Int, 'I', "int"},     {Primitive::Long, 'J', "long"},
    {Primitive::Short, 'S', "short"}, {Primitive::Boolean, 'Z', "boolean"},
};

class DescriptorReader {
public:
    explicit DescriptorReader(std::string_view raw) : raw_(raw) {}

    std::size_t pos() const noexcept { return pos_; }
    bool at_end() const noexcept { return pos_ >= raw_.size(); }
    char peek() const noexcept { return at_end() ? '\0' : raw_[pos_]; }

    [[noreturn]] void fail(std::size_t index) const {
        throw DescriptorSyntax(index, std::string(raw_));
    }

    void expect(char c) {
        if (peek() != c) fail(pos_);
        ++pos_;
    }

    TypeRef field_type() {
        std::size_t dims = 0;
        while (peek() == '[') {
            if (++dims > kMaxDimensions) fail(pos_);
            ++pos_;
        }
        if (at_end()) fail(pos_);
        const char tag = raw_[pos_];
        if (tag == 'L') {
            ++pos_;
            const std::size_t start = pos_;
            bool segment_empty = true;
            while (!at_end() && raw_[pos_] != ';') {
                const char c = raw_[pos_];
                if (c == '.' || c == '[' || c == '(' || c == ')') fail(pos_);
                if (c == '/') {
                    if (segment_empty) fail(pos_);
                    segment_empty = true;
                } else {
                    segment_empty = false;
                }
                ++pos_;
            }
            if (at_end()) fail(pos_);
            if (segment_empty) fail(pos_);
            std::string name(raw_.substr(start, pos_ - start));
            ++pos_;  // ';'
            return TypeRef::object(std::move(name), static_cast<std::uint8_t>(dims));
        }
        const auto prim = primitive_from_tag(tag);
        if (!prim) fail(pos_);
        ++pos_;
        return TypeRef::of(*prim, static_cast<std::uint8_t>(dims));
    }

private:
    std::string_view raw_;
    std::size_t pos_ = 0;
};

}  // namespace

char primitive_tag(Primitive p) noexcept {
    return kPrimitiveTable[static_cast<std::size_t>(p)].tag;
}

std::string_view primitive_name(Primitive p) noexcept {
    return kPrimitiveTable[static_cast<std::size_t>(p)].name;
}

std::optional<Primitive> primitive_from_tag(char tag) noexcept {
    for (const auto& info : kPrimitiveTable) {
        if (info.tag == tag) return info.primitive;
    }
    return std::nullopt;
}

std::optional<Primitive> primitive_from_name(std::string_view name) noexcept {
    for (const auto& info : kPrimitiveTable) {
        if (info.name == name) return info.primitive;
    }
    return std::nullopt;
}

TypeRef TypeRef::of(Primitive p, std::uint8_t dims) {
    TypeRef t;
    t.element_kind = Kind::Primitive;
    t.primitive = p;
    t.dimensions = dims;
    return t;
}

TypeRef TypeRef::object(std::string internal_name, std::uint8_t dims) {
    TypeRef t;
    t.element_kind = Kind::Object;
    t.internal_name = std::move(internal_name);
    t.dimensions = dims;
    return t;
}

unsigned TypeRef::words() const noexcept {
    if (dimensions == 0 && element_kind == Kind::Primitive &&
        (primitive == Primitive::Long || primitive == Primitive::Double)) {
        return 2;
    }
    return 1;
}

std::string TypeRef::element_class_name() const {
    if (element_kind != Kind::Object) return {};
    std::string dotted = internal_name;
    std::replace(dotted.begin(), dotted.end(), '/', '.');
    return dotted;
}

std::string TypeRef::simple_name() const {
    if (element_kind == Kind::Primitive) return std::string(primitive_name(primitive));
    const auto slash = internal_name.rfind('/');
    return slash == std::string::npos ? internal_name : internal_name.substr(slash + 1);
}

std::string TypeRef::descriptor() const {
    std::string out(dimensions, '[');
    if (element_kind == Kind::Primitive) {
        out += primitive_tag(primitive);
    } else {
        out += 'L';
        out += internal_name;
        out += ';';
    }
    return out;
}

std::string TypeRef::java_name() const {
    std::string out = element_kind == Kind::Primitive ? std::string(primitive_name(primitive))
                                                      : element_class_name();
    for (std::uint8_t i = 0; i < dimensions; ++i) out += "[]";
    return out;
}

unsigned MethodDescriptor::param_words() const noexcept {
    unsigned words = 0;
    for (const auto& p : params) words += p.words();
    return words;
}

std::string MethodDescriptor::render() const {
    std::string out = "(";
    for (const auto& p : params) out += p.descriptor();
    out += ')';
    out += return_type ? return_type->descriptor() : "V";
    return out;
}

MethodDescriptor parse_method_descriptor(std::string_view raw) {
    DescriptorReader reader(raw);
    if (raw.empty()) reader.fail(0);
    reader.expect('(');
    MethodDescriptor md;
    while (!reader.at_end() && reader.peek() != ')') md.params.push_back(reader.field_type());
    reader.expect(')');
    if (reader.peek() == 'V') {
        reader.expect('V');
    } else {
        md.return_type = reader.field_type();
    }
    if (!reader.at_end()) reader.fail(reader.pos());
    return md;
}

TypeRef parse_field_descriptor(std::string_view raw) {
    DescriptorReader reader(raw);
    if (raw.empty()) reader.fail(0);
    TypeRef t = reader.field_type();
    if (!reader.at_end()) reader.fail(reader.pos());
    return t;
}

std::optional<TypeRef> parse_java_type(std::string_view name) {
    const std::string raw(name);
    if (name.empty()) throw DescriptorSyntax(0, raw);
    std::size_t dims = 0;
    std::string_view base = name;
    while (base.size() >= 2 && base.substr(base.size() - 2) == "[]") {
        base.remove_suffix(2);
        ++dims;
    }
    if (dims > kMaxDimensions) throw DescriptorSyntax(base.size(), raw);
    if (base.empty()) throw DescriptorSyntax(0, raw);
    if (base == "void") {
        if (dims != 0) throw DescriptorSyntax(base.size(), raw);
        return std::nullopt;
    }
    if (const auto prim = primitive_from_name(base)) {
        return TypeRef::of(*prim, static_cast<std::uint8_t>(dims));
    }
    std::string internal;
    internal.reserve(base.size());
    bool segment_empty = true;
    for (std::size_t i = 0; i < base.size(); ++i) {
        const char c = base[i];
        if (c == '/' || c == ';' || c == '[' || c == ']' || c == '(' || c == ')' || c == ' ') {
            throw DescriptorSyntax(i, raw);
        }
        if (c == '.') {
            if (segment_empty) throw DescriptorSyntax(i, raw);
            segment_empty = true;
            internal += '/';
        } else {
            segment_empty = false;
            internal += c;
        }
    }
    if (segment_empty) throw DescriptorSyntax(base.size(), raw);
    return TypeRef::object(std::move(internal), static_cast<std::uint8_t>(dims));
}

std::string java_type_name(const std::optional<TypeRef>& type) {
    return type ? type->java_name() : "void";
}

}  // namespace biolabel::classfile

#pragma once

#include "biolabel/classfile/descriptor.hpp"

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace biolabel::features {

/// Inclusive parameter-count range; `max` empty means open-ended ("4+").
struct ParamBucket {
    std::size_t min = 0;
    std::optional<std::size_t> max;

    bool contains(std::size_t n) const noexcept { return n >= min && (!max || n <= *max); }
    std::string label() const;
    static std::optional<ParamBucket> parse(std::string_view text);

    bool operator==(const ParamBucket&) const = default;
};

/// Vocabulary from which the feature catalog is generated.
///
/// File format: sections `[keywords]`, `[type_keywords]`, `[param_buckets]`,
/// one token per line, `#` starts a comment.
struct Lexicon {
    std::vector<std::string> keywords;       // lowercase, unique
    std::vector<std::string> type_keywords;  // case kept, unique
    std::vector<classfile::Primitive> primitives{std::begin(classfile::kAllPrimitives),
                                                 std::end(classfile::kAllPrimitives)};
    std::vector<ParamBucket> param_buckets = default_buckets();

    static std::vector<ParamBucket> default_buckets();

    /// Throws LexiconSyntax (with line number) or EmptyLexicon.
    static Lexicon parse(std::string_view text);
    static Lexicon load(const std::filesystem::path& path);
    /// The lexicon shipped in data/default.lexicon, compiled in.
    static const Lexicon& builtin();

    /// Throws EmptyLexicon / LexiconSyntax(0, ...) when invariants fail.
    void validate() const;
    /// Same content with every list sorted.
    Lexicon canonical() const;
    std::string serialize() const;

    bool operator==(const Lexicon&) const = default;
};

}  // namespace biolabel::features

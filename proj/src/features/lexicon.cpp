#include "biolabel/features/lexicon.hpp"

#include "biolabel/error.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

namespace biolabel::features {

extern const char* const kBuiltinLexiconText;  // generated from data/default.lexicon

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

std::optional<std::size_t> parse_count(std::string_view s) {
    std::size_t v = 0;
    const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || end != s.data() + s.size() || s.empty()) return std::nullopt;
    return v;
}

bool is_lowercase_token(std::string_view s) {
    return std::none_of(s.begin(), s.end(), [](char c) {
        return std::isupper(static_cast<unsigned char>(c)) || std::isspace(static_cast<unsigned char>(c));
    });
}

}  // namespace

std::string ParamBucket::label() const {
    if (!max) return std::to_string(min) + "+";
    if (*max == min) return std::to_string(min);
    return std::to_string(min) + "-" + std::to_string(*max);
}

std::optional<ParamBucket> ParamBucket::parse(std::string_view text) {
    if (text.empty()) return std::nullopt;
    if (text.back() == '+') {
        const auto lo = parse_count(text.substr(0, text.size() - 1));
        if (!lo) return std::nullopt;
        return ParamBucket{*lo, std::nullopt};
    }
    if (const auto dash = text.find('-'); dash != std::string_view::npos) {
        const auto lo = parse_count(text.substr(0, dash));
        const auto hi = parse_count(text.substr(dash + 1));
        if (!lo || !hi || *hi < *lo) return std::nullopt;
        return ParamBucket{*lo, *hi};
    }
    const auto n = parse_count(text);
    if (!n) return std::nullopt;
    return ParamBucket{*n, *n};
}

std::vector<ParamBucket> Lexicon::default_buckets() {
    return {{0, 0}, {1, 1}, {2, 2}, {3, 3}, {4, std::nullopt}};
}

Lexicon Lexicon::parse(std::string_view text) {
    Lexicon lex;
    lex.param_buckets.clear();
    bool saw_buckets = false;
    enum class Section { None, Keywords, Types, Buckets } section = Section::None;
    std::set<std::string> seen_keywords, seen_types;

    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t nl = text.find('\n', pos);
        std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;

        if (line.front() == '[') {
            if (line == "[keywords]") {
                section = Section::Keywords;
            } else if (line == "[type_keywords]") {
                section = Section::Types;
            } else if (line == "[param_buckets]") {
                section = Section::Buckets;
                saw_buckets = true;
            } else {
                throw LexiconSyntax(line_no, "unknown section " + std::string(line));
            }
            continue;
        }
        if (line.find_first_of(" \t") != std::string_view::npos) {
            throw LexiconSyntax(line_no, "one token per line expected");
        }
        const std::string token(line);
        switch (section) {
            case Section::None:
                throw LexiconSyntax(line_no, "token before any section");
            case Section::Keywords:
                if (!is_lowercase_token(token)) throw LexiconSyntax(line_no, "keyword must be lowercase: " + token);
                if (!seen_keywords.insert(token).second) throw LexiconSyntax(line_no, "duplicate keyword " + token);
                lex.keywords.push_back(token);
                break;
            case Section::Types:
                if (!seen_types.insert(token).second) throw LexiconSyntax(line_no, "duplicate type keyword " + token);
                lex.type_keywords.push_back(token);
                break;
            case Section::Buckets: {
                const auto bucket = ParamBucket::parse(token);
                if (!bucket) throw LexiconSyntax(line_no, "bad bucket " + token);
                for (const auto& b : lex.param_buckets) {
                    const bool disjoint = (b.max && *b.max < bucket->min) || (bucket->max && *bucket->max < b.min);
                    if (!disjoint) throw LexiconSyntax(line_no, "bucket " + token + " overlaps " + b.label());
                }
                lex.param_buckets.push_back(*bucket);
                break;
            }
        }
    }
    if (!saw_buckets) lex.param_buckets = default_buckets();
    if (lex.keywords.empty() && lex.type_keywords.empty()) throw EmptyLexicon();
    return lex;
}

Lexicon Lexicon::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot read lexicon " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

const Lexicon& Lexicon::builtin() {
    static const Lexicon lex = parse(kBuiltinLexiconText);
    return lex;
}

void Lexicon::validate() const {
    if (keywords.empty() && type_keywords.empty()) throw EmptyLexicon();
    std::set<std::string> k;
    for (const auto& w : keywords) {
        if (w.empty() || !is_lowercase_token(w) || !k.insert(w).second) {
            throw LexiconSyntax(0, "invalid or duplicate keyword '" + w + "'");
        }
    }
    std::set<std::string> t;
    for (const auto& w : type_keywords) {
        if (w.empty() || !t.insert(w).second) throw LexiconSyntax(0, "invalid or duplicate type keyword '" + w + "'");
    }
}

Lexicon Lexicon::canonical() const {
    Lexicon out = *this;
    std::sort(out.keywords.begin(), out.keywords.end());
    std::sort(out.type_keywords.begin(), out.type_keywords.end());
    std::sort(out.primitives.begin(), out.primitives.end());
    std::sort(out.param_buckets.begin(), out.param_buckets.end(),
              [](const ParamBucket& a, const ParamBucket& b) { return a.min < b.min; });
    return out;
}

std::string Lexicon::serialize() const {
    std::string out = "[keywords]\n";
    for (const auto& k : keywords) out += k + "\n";
    out += "\n[type_keywords]\n";
    for (const auto& k : type_keywords) out += k + "\n";
    out += "\n[param_buckets]\n";
    for (const auto& b : param_buckets) out += b.label() + "\n";
    return out;
}

}  // namespace biolabel::features

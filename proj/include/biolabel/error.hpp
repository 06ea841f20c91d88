#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace biolabel {

/// Root of every error the library throws. Recoverable per-item failures
/// (one bad class in an archive, one degenerate label) are reported as
/// warnings by the caller instead.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class MalformedClassFile : public Error {
public:
    MalformedClassFile(std::size_t offset, const std::string& what)
        : Error("malformed class file at byte " + std::to_string(offset) + ": " + what),
          offset_(offset) {}

    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

class UnsupportedVersion : public Error {
public:
    UnsupportedVersion(unsigned major, unsigned minor)
        : Error("unsupported class file version " + std::to_string(major) + "." +
                std::to_string(minor)),
          major_(major) {}

    unsigned major() const noexcept { return major_; }

private:
    unsigned major_;
};

class DescriptorSyntax : public Error {
public:
    DescriptorSyntax(std::size_t index, const std::string& raw)
        : Error("descriptor syntax error at index " + std::to_string(index) + " in \"" + raw +
                "\""),
          index_(index) {}

    std::size_t index() const noexcept { return index_; }

private:
    std::size_t index_;
};

class ArchiveUnreadable : public Error {
public:
    using Error::Error;
};

class FlowAnalysisError : public Error {
public:
    enum class Kind { StackUnderflow, InconsistentStackDepth, BadLocal };

    FlowAnalysisError(Kind kind, std::size_t offset, const std::string& what)
        : Error(what + " at offset " + std::to_string(offset)), kind_(kind), offset_(offset) {}

    Kind kind() const noexcept { return kind_; }
    std::size_t offset() const noexcept { return offset_; }

private:
    Kind kind_;
    std::size_t offset_;
};

class EmptyLexicon : public Error {
public:
    EmptyLexicon() : Error("lexicon has no keywords and no type keywords") {}
};

class LexiconSyntax : public Error {
public:
    LexiconSyntax(std::size_t line, const std::string& what)
        : Error("lexicon line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class CatalogMismatch : public Error {
public:
    CatalogMismatch(const std::string& expected, const std::string& got)
        : Error("feature catalog mismatch: expected " + expected + ", got " + got) {}
};

class SchemaViolation : public Error {
public:
    SchemaViolation(std::size_t line, const std::string& field, const std::string& what)
        : Error("line " + std::to_string(line) + ", field '" + field + "': " + what),
          line_(line),
          field_(field) {}

    std::size_t line() const noexcept { return line_; }
    const std::string& field() const noexcept { return field_; }

private:
    std::size_t line_;
    std::string field_;
};

class DuplicateRecord : public Error {
public:
    DuplicateRecord(std::size_t line, std::size_t first_line, const std::string& name)
        : Error("line " + std::to_string(line) + ": duplicate of record on line " +
                std::to_string(first_line) + " (" + name + ")"),
          line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class BscConflict : public Error {
public:
    BscConflict(std::size_t line, const std::string& name)
        : Error("line " + std::to_string(line) + ": more than one BSC label on " + name),
          line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class EmptyDataset : public Error {
public:
    EmptyDataset() : Error("dataset has no records") {}
};

class TooFewRecords : public Error {
public:
    TooFewRecords(std::size_t have, std::size_t need)
        : Error("cross-validation needs at least " + std::to_string(need) + " records, have " +
                std::to_string(have)) {}
};

class ModelFormatError : public Error {
public:
    using Error::Error;
};

class MalformedResults : public Error {
public:
    MalformedResults(std::size_t line, const std::string& what)
        : Error("results line " + std::to_string(line) + ": " + what) {}
};

}  // namespace biolabel

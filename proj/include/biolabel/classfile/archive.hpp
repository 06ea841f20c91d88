#pragma once

#include "biolabel/classfile/model.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace biolabel::classfile {

struct ScanSummary {
    std::size_t classes = 0;
    std::size_t methods = 0;
    std::size_t failures = 0;
    std::vector<std::string> warnings;
};

/// The `.class` entries of a JAR/zip archive, a directory tree, or a single
/// class file, listed in lexicographic entry-name order. Entry bytes are read
/// on demand, so only the index is held in memory. `read` is safe to call
/// concurrently.
class ClassSource {
public:
    /// Throws ArchiveUnreadable when the path is missing or the zip central
    /// directory is corrupt.
    static ClassSource open(const std::filesystem::path& path);

    ClassSource(ClassSource&&) noexcept;
    ClassSource& operator=(ClassSource&&) noexcept;
    ~ClassSource();

    const std::filesystem::path& path() const noexcept;
    std::size_t size() const noexcept;
    const std::string& entry_name(std::size_t index) const;

    /// Raw bytes of one entry. Throws Error on a per-entry failure
    /// (bad local header, unsupported compression, CRC mismatch).
    std::vector<std::uint8_t> read(std::size_t index) const;

    /// Non-fatal notes gathered while indexing (skipped nested archives).
    const std::vector<std::string>& index_warnings() const noexcept;

    class Impl;

private:
    explicit ClassSource(std::unique_ptr<Impl> impl);
    std::unique_ptr<Impl> impl_;
};

/// Reads and parses one entry, tagging the model with its origin.
ClassModel parse_entry(const ClassSource& source, std::size_t index);

/// Streams every class of `path` to `sink` in entry order. Unreadable or
/// malformed entries become warnings and are counted as failures; the scan
/// always runs to completion once the archive itself opened.
ScanSummary scan_archive(const std::filesystem::path& path,
                         const std::function<void(ClassModel&&)>& sink);

}  // namespace biolabel::classfile

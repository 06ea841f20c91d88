#pragma once

#include "biolabel/learners/learners.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace biolabel::pipeline {

using groundtruth::Label;
using groundtruth::kLabelCount;

/// One line of a results file.
struct MethodResult {
    std::string owner;  // dotted
    std::string method;
    std::string descriptor;  // raw JVM descriptor
    struct Scored {
        Label label;
        std::optional<double> score;  // nullopt when the label model is constant
        bool operator==(const Scored&) const = default;
    };
    std::vector<Scored> labels;  // enum order; BSC only as resolved
    std::optional<Label> resolved_bsc;

    std::string qualified_name() const { return owner + "." + method + descriptor; }
    bool has(Label l) const;
    bool operator==(const MethodResult&) const = default;
};

MethodResult to_result(const classfile::MethodModel& method, const learners::LabelAssignment& a);

/// Compact single-line JSON, no trailing newline.
std::string result_to_json(const MethodResult& r);

/// Throws MalformedResults with the 1-based line number. Blank lines are
/// skipped.
std::vector<MethodResult> parse_results(std::string_view text);
std::vector<MethodResult> load_results(const std::filesystem::path& path);

/// Reference scale point: one large app of 105,185 methods classified in
/// 38.51 s (sd 1.68) with 641.48 MB. The scale acceptance limits derive from it.
inline constexpr std::size_t kReferenceMethods = 105'185;
inline constexpr double kReferenceSeconds = 38.51;
inline constexpr double kReferenceMegabytes = 641.48;

struct RunStats {
    std::size_t classes = 0;
    std::size_t total_methods = 0;
    std::size_t biometric_methods = 0;  // methods with at least one label
    std::size_t failures = 0;           // entries that could not be read or parsed
    double wall_seconds = 0.0;
    double peak_memory_mb = 0.0;  // process peak RSS
    std::array<std::size_t, kLabelCount> label_counts{};
    std::vector<std::string> warnings;
};

/// Peak resident set size of this process so far, in MB.
double peak_rss_mb();

struct ClassifyOptions {
    bool all = false;       // emit methods without labels too
    std::size_t jobs = 0;   // 0: every available core; 1: serial
    std::size_t batch = 0;  // entries per batch; 0: 16 per job
};

/// Scans every class of `archive`, classifies each method and hands result
/// lines to `sink` in (entry, method) order whatever the job count. Classes
/// are processed in batches, so at most one batch of classes is held in
/// memory. Unreadable entries become warnings. Throws ArchiveUnreadable or
/// CatalogMismatch.
RunStats classify_archive(const std::filesystem::path& archive, const learners::LabelModelBundle& bundle,
                          const features::Catalog& catalog, const std::function<void(const MethodResult&)>& sink,
                          const ClassifyOptions& options = {});

/// Table of per-label counts followed by the run statistics.
std::string render_stats(const RunStats& stats);
std::string stats_to_json(const RunStats& stats);

struct ReportSection {
    std::string title;
    std::vector<Label> labels;
    std::string empty_note;  // appended to "None found." when nothing matched
};

/// Consent, storage, purposes, portability and retention, in that order.
const std::vector<ReportSection>& report_sections();

/// DPIA-assist document in Markdown. Deterministic: methods are listed in
/// sorted qualified-name order.
std::string render_report(const std::vector<MethodResult>& results, const std::string& source_name);

}  // namespace biolabel::pipeline

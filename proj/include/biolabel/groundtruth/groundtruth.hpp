#pragma once

#include "biolabel/classfile/archive.hpp"
#include "biolabel/features/features.hpp"

#include <array>
#include <bitset>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace biolabel::groundtruth {

enum class Label : std::uint8_t {
    BSC1,
    BSC2,
    BSC3,
    SOURCE,
    SINK,
    CHECKER,
    PERMISSION,
    AUTHENTICATE,
    CRYPTO,
    TERMINATION,
    INTERACTION,
    TRANSFER,
    ACQUISITION,
    DELETION,
    STORAGE,
    DATABASE,
};

inline constexpr std::size_t kLabelCount = 16;
extern const std::array<Label, kLabelCount> kAllLabels;

std::string_view label_name(Label l) noexcept;
std::optional<Label> label_from_name(std::string_view name) noexcept;
constexpr bool is_bsc(Label l) noexcept { return l <= Label::BSC3; }

/// Bit i is Label(i); iteration order is enum order.
using LabelSet = std::bitset<kLabelCount>;

inline bool has(const LabelSet& s, Label l) { return s.test(static_cast<std::size_t>(l)); }
inline void add(LabelSet& s, Label l) { s.set(static_cast<std::size_t>(l)); }
std::vector<Label> labels_of(const LabelSet& s);
LabelSet label_set(std::initializer_list<Label> labels);

/// One ground-truth record. Type strings are source-style (`int`,
/// `byte[]`, `android.os.CancellationSignal`, `void`). Callee names are
/// `owner.name`, optionally followed by the JVM descriptor
/// (`android.os.CancellationSignal.isCanceled()Z`).
struct AnnotatedMethod {
    std::string name;  // package.class.method
    std::string return_type = "void";
    std::vector<std::string> parameter_types;
    std::vector<std::string> callee_names;
    LabelSet labels;
    std::string provenance;  // note of the batch this record came from

    /// `name(type,type)`: the identity used for duplicate detection.
    std::string key() const;
    std::string class_name() const;
    std::string method_name() const;

    bool operator==(const AnnotatedMethod&) const = default;
};

struct Dataset {
    std::vector<AnnotatedMethod> records;
    std::vector<std::string> warnings;

    std::size_t size() const noexcept { return records.size(); }
    bool empty() const noexcept { return records.empty(); }
    std::size_t positives(Label l) const;
};

/// Checks one record against the schema. `line` is used for error reporting.
/// Throws SchemaViolation or BscConflict.
void validate_record(const AnnotatedMethod& record, std::size_t line);

/// Parses JSON Lines. Lines of the form {"provenance": "..."} set the
/// provenance of the records that follow. Throws SchemaViolation,
/// DuplicateRecord, BscConflict.
Dataset parse_dataset(std::string_view text);
Dataset load_dataset(const std::filesystem::path& path);

/// Canonical text: fixed key order, labels in enum order, a provenance line
/// whenever the provenance changes. Validates every record first.
std::string serialize_dataset(const Dataset& dataset);
void save_dataset(const Dataset& dataset, const std::filesystem::path& path);

struct Split {
    Dataset train;
    Dataset test;
    std::vector<std::string> warnings;
};

/// Multi-label stratified split. Train holds round(fraction * n) records
/// (more only if records pinned by degenerate labels exceed that); for every
/// label with at least two positives the train positive count is within 1 of
/// fraction * positives. Records carrying a label with a single positive go
/// to train with a warning. Throws EmptyDataset, std::invalid_argument.
Split stratified_split(const Dataset& dataset, double train_fraction, std::uint64_t seed);

/// Converts a parsed method into an unlabeled record. Callees are listed once
/// each, in first-call order, with their descriptors.
AnnotatedMethod record_of(const classfile::MethodModel& method);

/// One unlabeled record per method of every class in `path`.
std::vector<AnnotatedMethod> harvest_records(const std::filesystem::path& path,
                                             classfile::ScanSummary* summary = nullptr);

/// Feature view of a record. Records carry no bytecode, so all flow bits are
/// false; callee type features apply only to callees with descriptors.
features::FeatureSubject subject_of(const AnnotatedMethod& record);

}  // namespace biolabel::groundtruth

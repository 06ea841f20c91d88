#pragma once

#include "biolabel/learners/learners.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace biolabel::evaluation {

using groundtruth::Label;
using groundtruth::LabelSet;
using learners::TrainingMatrix;

enum class Execution { Serial, Parallel };

/// fold[r][i] is the test fold of record i in repeat r.
struct FoldPlan {
    std::size_t k = 0;
    std::size_t repeats = 0;
    std::uint64_t seed = 0;
    std::vector<std::vector<std::uint32_t>> fold;

    std::vector<std::size_t> test_indices(std::size_t repeat, std::size_t f) const;
    std::vector<std::size_t> train_indices(std::size_t repeat, std::size_t f) const;
};

/// Records are grouped by their rarest positive label among `labels` (the
/// unlabeled form a last group), shuffled within groups, then dealt to folds
/// round-robin. Fold sizes differ by at most one, and so do the per-fold
/// counts of each group. Throws TooFewRecords if there are fewer than k.
FoldPlan make_fold_plan(const std::vector<LabelSet>& targets, const std::vector<Label>& labels, std::size_t k,
                        std::size_t repeats, std::uint64_t seed);

std::uint64_t fold_seed(std::uint64_t seed, std::size_t repeat, std::size_t fold) noexcept;

struct FoldOutput {
    std::vector<LabelSet> predictions;  // one per test row
    std::vector<std::string> warnings;
};

/// Trains on `train` and predicts every row of `test`.
using Learner = std::function<FoldOutput(const TrainingMatrix& train, const TrainingMatrix& test, std::uint64_t seed)>;

/// Trains a bundle and reports assignment labels (BSC resolved).
Learner algorithm_learner(learners::Algorithm a, const learners::Hyperparameters& hp = {});

struct NamedLearner {
    std::string name;
    Learner learner;
};

struct Confusion {
    std::uint64_t tp = 0, fp = 0, fn = 0, tn = 0;

    /// nullopt for 0/0.
    std::optional<double> precision() const;
    std::optional<double> recall() const;
    Confusion& operator+=(const Confusion& o);
    bool operator==(const Confusion&) const = default;
};

struct Summary {
    std::optional<double> median_precision, mean_precision;
    std::optional<double> median_recall, mean_recall;
    std::size_t undefined_precision = 0;  // repeats with no positive prediction
    std::size_t undefined_recall = 0;
};

/// Median and mean over the defined values only.
Summary summarize(const std::vector<Confusion>& per_repeat);

struct CellMetrics {
    std::string algorithm;
    Label label;
    std::vector<Confusion> per_repeat;  // counts pooled over the folds of a repeat
    Confusion total;
    Summary summary;
};

struct MetricsReport {
    std::size_t k = 0;
    std::size_t repeats = 0;
    std::uint64_t seed = 0;
    std::size_t records = 0;
    std::vector<std::string> algorithms;
    std::vector<Label> labels;
    std::vector<CellMetrics> cells;  // algorithm-major, labels in the given order
    std::vector<std::string> warnings;

    const CellMetrics& cell(std::string_view algorithm, Label label) const;
};

MetricsReport cross_validate(const TrainingMatrix& matrix, const std::vector<NamedLearner>& learners,
                             const std::vector<Label>& labels, std::size_t k, std::size_t repeats,
                             std::uint64_t seed, Execution exec = Execution::Parallel);

MetricsReport cross_validate(const groundtruth::Dataset& dataset, const features::Catalog& catalog,
                             const std::vector<learners::Algorithm>& algorithms, const std::vector<Label>& labels,
                             std::size_t k, std::size_t repeats, std::uint64_t seed,
                             const learners::Hyperparameters& hp = {}, Execution exec = Execution::Parallel);

/// SVM averages reported for the original, unreleased dataset. Kept for
/// comparison in reports; the bundled data cannot reproduce them.
inline constexpr double kReferenceSvmPrecision = 0.9725;
inline constexpr double kReferenceSvmRecall = 0.98;

/// Table column groups in the default view: Source, Sink, Auth, Crypto.
inline const std::vector<Label> kTableLabels = {Label::SOURCE, Label::SINK, Label::AUTHENTICATE, Label::CRYPTO};

std::string column_name(Label l);  // "Auth" for AUTHENTICATE, otherwise capitalized

enum class Statistic { Median, Mean };

struct ComparisonRow {
    std::string algorithm;
    std::vector<std::optional<double>> precision;  // per column label
    std::vector<std::optional<double>> recall;
    std::optional<double> average_precision;  // mean of the defined columns
    std::optional<double> average_recall;
};

/// Rows follow report.algorithms; columns follow `columns` (each must be in
/// the report).
std::vector<ComparisonRow> comparison(const MetricsReport& report, const std::vector<Label>& columns, Statistic s);

/// Median and mean blocks as aligned text; undefined values print as "/".
std::string render_text(const MetricsReport& report, const std::vector<Label>& columns = kTableLabels);
/// Per-repeat rows, per-cell summaries and both comparison blocks.
std::string render_json(const MetricsReport& report, const std::vector<Label>& columns = kTableLabels);

}  // namespace biolabel::evaluation

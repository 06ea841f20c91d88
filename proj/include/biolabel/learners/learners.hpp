#pragma once

#include "biolabel/features/features.hpp"
#include "biolabel/groundtruth/groundtruth.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace biolabel::learners {

using groundtruth::Label;
using groundtruth::LabelSet;

/// Feature vectors from one catalog plus their label sets.
class TrainingMatrix {
public:
    TrainingMatrix(std::uint64_t catalog_id, std::size_t features) : catalog_id_(catalog_id), features_(features) {}

    static TrainingMatrix from_dataset(const groundtruth::Dataset& dataset, const features::Catalog& catalog);

    /// Throws CatalogMismatch if `v` comes from another catalog.
    void add(const features::FeatureVector& v, LabelSet labels);

    std::uint64_t catalog_id() const noexcept { return catalog_id_; }
    std::size_t features() const noexcept { return features_; }
    std::size_t size() const noexcept { return rows_.size(); }
    /// Ascending indices of the set bits of row i.
    const std::vector<std::uint32_t>& row(std::size_t i) const { return rows_[i]; }
    bool bit(std::size_t i, std::size_t feature) const { return vectors_[i].test(feature); }
    const features::FeatureVector& vector(std::size_t i) const { return vectors_[i]; }
    bool target(std::size_t i, Label l) const { return groundtruth::has(targets_[i], l); }
    LabelSet targets(std::size_t i) const { return targets_[i]; }
    std::size_t positives(Label l) const;

    TrainingMatrix subset(std::span<const std::size_t> indices) const;

private:
    std::uint64_t catalog_id_;
    std::size_t features_;
    std::vector<features::FeatureVector> vectors_;
    std::vector<std::vector<std::uint32_t>> rows_;
    std::vector<LabelSet> targets_;
};

enum class Algorithm : std::uint8_t { NaiveBayes, Logistic, Stump, Tree, Svm };

inline constexpr std::array<Algorithm, 5> kAllAlgorithms = {Algorithm::NaiveBayes, Algorithm::Logistic,
                                                            Algorithm::Stump, Algorithm::Tree, Algorithm::Svm};

std::string_view algorithm_name(Algorithm a) noexcept;  // naive_bayes, logistic, stump, tree, svm
/// Also accepts "nb".
std::optional<Algorithm> algorithm_from_name(std::string_view name) noexcept;

struct Hyperparameters {
    double nb_alpha = 1.0;
    double logistic_learning_rate = 0.1;
    double logistic_l2 = 1e-4;
    std::size_t logistic_epochs = 200;
    double svm_lambda = 1e-4;
    std::size_t svm_epochs = 50;
    std::size_t tree_max_depth = 8;
    std::size_t tree_min_leaf = 2;

    bool operator==(const Hyperparameters&) const = default;
};

struct Prediction {
    bool decision = false;
    double score = 0.0;  // decision == (score > 0)
};

/// Trained on single-class data; score is +/-infinity.
struct ConstantModel {
    bool positive = false;
    bool operator==(const ConstantModel&) const = default;
};

/// Bernoulli naive Bayes in log-odds form:
/// score = base + sum over set bits of delta[j].
struct NaiveBayesModel {
    double base = 0.0;
    std::vector<double> delta;
    bool operator==(const NaiveBayesModel&) const = default;
};

/// score = bias + sum over set bits of weights[j]. Logistic (score is the
/// logit) and SVM (score is the margin).
struct LinearModel {
    std::vector<double> weights;
    double bias = 0.0;
    bool operator==(const LinearModel&) const = default;
};

/// Leaf scores are 2p - 1 with p the Laplace-smoothed positive rate.
struct StumpModel {
    std::uint32_t feature = 0;
    double score_clear = 0.0;
    double score_set = 0.0;
    bool operator==(const StumpModel&) const = default;
};

struct TreeModel {
    struct Node {
        std::int32_t feature = -1;  // -1 for a leaf
        std::int32_t clear = -1;    // child indices
        std::int32_t set = -1;
        double score = 0.0;         // leaves: 2p - 1
        bool operator==(const Node&) const = default;
    };
    std::vector<Node> nodes;  // nodes[0] is the root
    bool operator==(const TreeModel&) const = default;
};

using BinaryModel = std::variant<ConstantModel, NaiveBayesModel, LinearModel, StumpModel, TreeModel>;

Prediction predict(const BinaryModel& model, std::span<const std::uint32_t> active);
Prediction predict(const BinaryModel& model, const features::FeatureVector& v);

struct TrainResult {
    BinaryModel model;
    std::optional<std::string> warning;  // set for single-class input
};

TrainResult train_naive_bayes(const TrainingMatrix& m, Label label, double alpha = 1.0);
TrainResult train_logistic(const TrainingMatrix& m, Label label, double l2, std::size_t epochs,
                           double learning_rate, std::uint64_t seed);
TrainResult train_stump(const TrainingMatrix& m, Label label);
TrainResult train_tree(const TrainingMatrix& m, Label label, std::size_t max_depth, std::size_t min_leaf);
TrainResult train_svm(const TrainingMatrix& m, Label label, double lambda, std::size_t epochs, std::uint64_t seed,
                      std::vector<double>* objective_trace = nullptr);

TrainResult train(Algorithm a, const TrainingMatrix& m, Label label, const Hyperparameters& hp, std::uint64_t seed);

/// Mean log-loss plus (l2/2)|w|^2 and its gradient; the bias is not
/// regularized. Exposed for the finite-difference check.
double logistic_objective(const TrainingMatrix& m, Label label, const LinearModel& params, double l2);
LinearModel logistic_gradient(const TrainingMatrix& m, Label label, const LinearModel& params, double l2);

/// The weighted hinge objective minimized by train_svm: (lambda/2)|w'|^2 plus
/// the class-weighted mean hinge loss, where w' includes the bias.
double svm_objective(const TrainingMatrix& m, Label label, const LinearModel& params, double lambda);

/// Feature with the fewest training errors when each side predicts its
/// majority; ties go to the lowest id. Exposed for the brute-force check.
std::size_t stump_errors(const TrainingMatrix& m, Label label, std::size_t feature);

/// Gain ratio of splitting the rows `rows` on `feature`; 0 when the split
/// puts everything on one side.
double gain_ratio(const TrainingMatrix& m, Label label, std::span<const std::size_t> rows, std::size_t feature);

struct LabelAssignment {
    std::string owner;
    std::string method;
    std::string descriptor;
    std::array<Prediction, groundtruth::kLabelCount> predictions{};
    std::optional<Label> resolved_bsc;

    /// Positive non-BSC labels plus the resolved BSC, in label order.
    std::vector<Label> labels() const;
};

/// Highest-scoring BSC label among those with a positive decision; ties go
/// to the lowest BSC number.
std::optional<Label> resolve_bsc(const std::array<Prediction, groundtruth::kLabelCount>& predictions);

struct LabelModelBundle {
    std::uint64_t catalog_id = 0;
    std::size_t features = 0;
    Algorithm algorithm = Algorithm::Svm;
    Hyperparameters hyperparameters;
    std::uint64_t seed = 0;
    std::string dataset_hash;
    std::array<BinaryModel, groundtruth::kLabelCount> models;
    std::vector<std::string> warnings;

    bool operator==(const LabelModelBundle& o) const {
        return catalog_id == o.catalog_id && features == o.features && algorithm == o.algorithm &&
               hyperparameters == o.hyperparameters && seed == o.seed && dataset_hash == o.dataset_hash &&
               models == o.models;
    }
};

/// Seed used for one label's model, so labels can be retrained in isolation.
std::uint64_t label_seed(std::uint64_t seed, Label label) noexcept;

/// One model per label, trained in parallel.
LabelModelBundle train_bundle(const TrainingMatrix& m, Algorithm a, const Hyperparameters& hp, std::uint64_t seed,
                              std::string dataset_hash = {});

/// Throws CatalogMismatch when the vector comes from another catalog.
LabelAssignment classify(const LabelModelBundle& bundle, const features::FeatureVector& v);

inline constexpr int kModelFormatVersion = 1;

std::string bundle_to_json(const LabelModelBundle& bundle);
/// Throws ModelFormatError on a bad document or version.
LabelModelBundle bundle_from_json(std::string_view text);
void save_bundle(const LabelModelBundle& bundle, const std::filesystem::path& path);
/// Also checks the catalog when `expected_catalog` is given.
LabelModelBundle load_bundle(const std::filesystem::path& path,
                             std::optional<std::uint64_t> expected_catalog = std::nullopt);

}  // namespace biolabel::learners

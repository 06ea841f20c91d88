#include "biolabel/error.hpp"
#include "biolabel/learners/learners.hpp"

#include <variant>

namespace biolabel::learners {

namespace {

constexpr std::string_view kAlgorithmNames[] = {"naive_bayes", "logistic", "stump", "tree", "svm"};

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

}  // namespace

std::string_view algorithm_name(Algorithm a) noexcept { return kAlgorithmNames[static_cast<std::size_t>(a)]; }

std::optional<Algorithm> algorithm_from_name(std::string_view name) noexcept {
    if (name == "nb") return Algorithm::NaiveBayes;
    for (auto a : kAllAlgorithms) {
        if (algorithm_name(a) == name) return a;
    }
    return std::nullopt;
}

TrainingMatrix TrainingMatrix::from_dataset(const groundtruth::Dataset& dataset, const features::Catalog& catalog) {
    TrainingMatrix m(catalog.id(), catalog.size());
    for (const auto& r : dataset.records) m.add(features::vectorize(groundtruth::subject_of(r), catalog), r.labels);
    return m;
}

void TrainingMatrix::add(const features::FeatureVector& v, LabelSet labels) {
    features::require_catalog(v, catalog_id_);
    if (v.size() != features_) throw CatalogMismatch(std::to_string(features_) + " features", std::to_string(v.size()));
    rows_.push_back(v.ones());
    vectors_.push_back(v);
    targets_.push_back(labels);
}

std::size_t TrainingMatrix::positives(Label l) const {
    std::size_t c = 0;
    for (const auto& t : targets_) c += groundtruth::has(t, l);
    return c;
}

TrainingMatrix TrainingMatrix::subset(std::span<const std::size_t> indices) const {
    TrainingMatrix out(catalog_id_, features_);
    out.vectors_.reserve(indices.size());
    out.rows_.reserve(indices.size());
    out.targets_.reserve(indices.size());
    for (auto i : indices) {
        out.vectors_.push_back(vectors_[i]);
        out.rows_.push_back(rows_[i]);
        out.targets_.push_back(targets_[i]);
    }
    return out;
}

Prediction predict(const BinaryModel& model, std::span<const std::uint32_t> active) {
    const double score = std::visit(
        Overloaded{
            [](const ConstantModel& c) {
                return c.positive ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
            },
            [&](const NaiveBayesModel& nb) {
                double s = nb.base;
                for (auto j : active) s += nb.delta[j];
                return s;
            },
            [&](const LinearModel& lin) {
                double s = lin.bias;
                for (auto j : active) s += lin.weights[j];
                return s;
            },
            [&](const StumpModel& st) {
                const bool set = std::binary_search(active.begin(), active.end(), st.feature);
                return set ? st.score_set : st.score_clear;
            },
            [&](const TreeModel& t) {
                std::size_t n = 0;
                while (t.nodes[n].feature >= 0) {
                    const auto f = static_cast<std::uint32_t>(t.nodes[n].feature);
                    n = static_cast<std::size_t>(std::binary_search(active.begin(), active.end(), f) ? t.nodes[n].set
                                                                                                     : t.nodes[n].clear);
                }
                return t.nodes[n].score;
            },
        },
        model);
    return {score > 0.0, score};
}

Prediction predict(const BinaryModel& model, const features::FeatureVector& v) {
    const auto active = v.ones();
    return predict(model, active);
}

}  // namespace biolabel::learners

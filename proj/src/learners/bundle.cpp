#include "biolabel/error.hpp"
#include "biolabel/learners/learners.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace biolabel::learners {

using groundtruth::kAllLabels;
using groundtruth::kLabelCount;
using nlohmann::ordered_json;

TrainResult train(Algorithm a, const TrainingMatrix& m, Label label, const Hyperparameters& hp, std::uint64_t seed) {
    switch (a) {
        case Algorithm::NaiveBayes:
            return train_naive_bayes(m, label, hp.nb_alpha);
        case Algorithm::Logistic:
            return train_logistic(m, label, hp.logistic_l2, hp.logistic_epochs, hp.logistic_learning_rate, seed);
        case Algorithm::Stump:
            return train_stump(m, label);
        case Algorithm::Tree:
            return train_tree(m, label, hp.tree_max_depth, hp.tree_min_leaf);
        case Algorithm::Svm:
            return train_svm(m, label, hp.svm_lambda, hp.svm_epochs, seed);
    }
    throw Error("unknown algorithm");
}

std::uint64_t label_seed(std::uint64_t seed, Label label) noexcept {
    // splitmix64 finalizer over the seed and label index
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (static_cast<std::uint64_t>(label) + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

LabelModelBundle train_bundle(const TrainingMatrix& m, Algorithm a, const Hyperparameters& hp, std::uint64_t seed,
                              std::string dataset_hash) {
    LabelModelBundle b;
    b.catalog_id = m.catalog_id();
    b.features = m.features();
    b.algorithm = a;
    b.hyperparameters = hp;
    b.seed = seed;
    b.dataset_hash = std::move(dataset_hash);
    std::array<std::optional<std::string>, kLabelCount> warnings;

#pragma omp parallel for schedule(dynamic)
    for (std::size_t l = 0; l < kLabelCount; ++l) {
        auto r = train(a, m, kAllLabels[l], hp, label_seed(seed, kAllLabels[l]));
        b.models[l] = std::move(r.model);
        warnings[l] = std::move(r.warning);
    }
    for (auto& w : warnings) {
        if (w) b.warnings.push_back(std::move(*w));
    }
    return b;
}

std::optional<Label> resolve_bsc(const std::array<Prediction, kLabelCount>& p) {
    std::optional<Label> best;
    for (auto l : {Label::BSC1, Label::BSC2, Label::BSC3}) {
        const auto& pr = p[static_cast<std::size_t>(l)];
        if (!pr.decision) continue;
        if (!best || pr.score > p[static_cast<std::size_t>(*best)].score) best = l;
    }
    return best;
}

std::vector<Label> LabelAssignment::labels() const {
    std::vector<Label> out;
    for (auto l : kAllLabels) {
        if (groundtruth::is_bsc(l) ? resolved_bsc == l : predictions[static_cast<std::size_t>(l)].decision) {
            out.push_back(l);
        }
    }
    return out;
}

LabelAssignment classify(const LabelModelBundle& bundle, const features::FeatureVector& v) {
    features::require_catalog(v, bundle.catalog_id);
    const auto active = v.ones();
    LabelAssignment a;
    for (std::size_t l = 0; l < kLabelCount; ++l) a.predictions[l] = predict(bundle.models[l], active);
    a.resolved_bsc = resolve_bsc(a.predictions);
    return a;
}

namespace {

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

ordered_json model_to_json(const BinaryModel& model) {
    return std::visit(
        Overloaded{
            [](const ConstantModel& c) { return ordered_json{{"kind", "constant"}, {"positive", c.positive}}; },
            [](const NaiveBayesModel& nb) {
                return ordered_json{{"kind", "naive_bayes"}, {"base", nb.base}, {"delta", nb.delta}};
            },
            [](const LinearModel& lin) {
                return ordered_json{{"kind", "linear"}, {"bias", lin.bias}, {"weights", lin.weights}};
            },
            [](const StumpModel& s) {
                return ordered_json{{"kind", "stump"},
                                    {"feature", s.feature},
                                    {"score_clear", s.score_clear},
                                    {"score_set", s.score_set}};
            },
            [](const TreeModel& t) {
                ordered_json nodes = ordered_json::array();
                for (const auto& n : t.nodes) nodes.push_back({n.feature, n.clear, n.set, n.score});
                return ordered_json{{"kind", "tree"}, {"nodes", nodes}};
            },
        },
        model);
}

BinaryModel model_from_json(const ordered_json& j, std::size_t features) {
    const auto kind = j.at("kind").get<std::string>();
    auto check_size = [&](std::size_t n) {
        if (n != features) throw ModelFormatError("model has " + std::to_string(n) + " weights, expected " +
                                                  std::to_string(features));
    };
    if (kind == "constant") return ConstantModel{j.at("positive").get<bool>()};
    if (kind == "naive_bayes") {
        NaiveBayesModel nb{j.at("base").get<double>(), j.at("delta").get<std::vector<double>>()};
        check_size(nb.delta.size());
        return nb;
    }
    if (kind == "linear") {
        LinearModel lin{j.at("weights").get<std::vector<double>>(), j.at("bias").get<double>()};
        check_size(lin.weights.size());
        return lin;
    }
    if (kind == "stump") {
        StumpModel s{j.at("feature").get<std::uint32_t>(), j.at("score_clear").get<double>(),
                     j.at("score_set").get<double>()};
        if (s.feature >= features) throw ModelFormatError("stump feature out of range");
        return s;
    }
    if (kind == "tree") {
        TreeModel t;
        for (const auto& n : j.at("nodes")) {
            t.nodes.push_back({n.at(0).get<std::int32_t>(), n.at(1).get<std::int32_t>(), n.at(2).get<std::int32_t>(),
                               n.at(3).get<double>()});
        }
        const auto count = static_cast<std::int32_t>(t.nodes.size());
        if (count == 0) throw ModelFormatError("empty tree");
        for (std::int32_t i = 0; i < count; ++i) {
            const auto& n = t.nodes[static_cast<std::size_t>(i)];
            if (n.feature < 0) continue;
            // Children come after their parent, so following them always terminates.
            if (static_cast<std::size_t>(n.feature) >= features || n.clear <= i || n.set <= i || n.clear >= count ||
                n.set >= count) {
                throw ModelFormatError("malformed tree node " + std::to_string(i));
            }
        }
        return t;
    }
    throw ModelFormatError("unknown model kind '" + kind + "'");
}

}  // namespace

std::string bundle_to_json(const LabelModelBundle& b) {
    const auto& hp = b.hyperparameters;
    ordered_json j;
    j["format"] = "biolabel-model";
    j["version"] = kModelFormatVersion;
    j["catalog_id"] = hex64(b.catalog_id);
    j["features"] = b.features;
    j["algorithm"] = algorithm_name(b.algorithm);
    j["hyperparameters"] = {{"nb_alpha", hp.nb_alpha},
                            {"logistic_learning_rate", hp.logistic_learning_rate},
                            {"logistic_l2", hp.logistic_l2},
                            {"logistic_epochs", hp.logistic_epochs},
                            {"svm_lambda", hp.svm_lambda},
                            {"svm_epochs", hp.svm_epochs},
                            {"tree_max_depth", hp.tree_max_depth},
                            {"tree_min_leaf", hp.tree_min_leaf}};
    j["training"] = {{"seed", b.seed}, {"dataset_hash", b.dataset_hash}, {"warnings", b.warnings}};
    j["models"] = ordered_json::array();
    for (std::size_t l = 0; l < kLabelCount; ++l) {
        auto m = model_to_json(b.models[l]);
        ordered_json entry{{"label", groundtruth::label_name(kAllLabels[l])}};
        entry.update(m);
        j["models"].push_back(std::move(entry));
    }
    return j.dump(1) + "\n";
}

LabelModelBundle bundle_from_json(std::string_view text) {
    try {
        const auto j = ordered_json::parse(text);
        if (j.at("format").get<std::string>() != "biolabel-model") throw ModelFormatError("not a model bundle");
        const auto version = j.at("version").get<int>();
        if (version != kModelFormatVersion) {
            throw ModelFormatError("unsupported model version " + std::to_string(version));
        }
        LabelModelBundle b;
        const auto id = j.at("catalog_id").get<std::string>();
        std::size_t used = 0;
        b.catalog_id = std::stoull(id, &used, 16);
        if (used != id.size()) throw ModelFormatError("bad catalog_id");
        b.features = j.at("features").get<std::size_t>();
        const auto alg = algorithm_from_name(j.at("algorithm").get<std::string>());
        if (!alg) throw ModelFormatError("unknown algorithm");
        b.algorithm = *alg;
        const auto& hp = j.at("hyperparameters");
        b.hyperparameters.nb_alpha = hp.at("nb_alpha").get<double>();
        b.hyperparameters.logistic_learning_rate = hp.at("logistic_learning_rate").get<double>();
        b.hyperparameters.logistic_l2 = hp.at("logistic_l2").get<double>();
        b.hyperparameters.logistic_epochs = hp.at("logistic_epochs").get<std::size_t>();
        b.hyperparameters.svm_lambda = hp.at("svm_lambda").get<double>();
        b.hyperparameters.svm_epochs = hp.at("svm_epochs").get<std::size_t>();
        b.hyperparameters.tree_max_depth = hp.at("tree_max_depth").get<std::size_t>();
        b.hyperparameters.tree_min_leaf = hp.at("tree_min_leaf").get<std::size_t>();
        const auto& tr = j.at("training");
        b.seed = tr.at("seed").get<std::uint64_t>();
        b.dataset_hash = tr.at("dataset_hash").get<std::string>();
        b.warnings = tr.at("warnings").get<std::vector<std::string>>();
        const auto& models = j.at("models");
        if (!models.is_array() || models.size() != kLabelCount) throw ModelFormatError("expected 16 label models");
        for (std::size_t l = 0; l < kLabelCount; ++l) {
            if (models[l].at("label").get<std::string>() != groundtruth::label_name(kAllLabels[l])) {
                throw ModelFormatError("label models out of order at " + std::to_string(l));
            }
            b.models[l] = model_from_json(models[l], b.features);
        }
        return b;
    } catch (const ordered_json::exception& e) {
        throw ModelFormatError(std::string("malformed model document: ") + e.what());
    } catch (const std::invalid_argument&) {
        throw ModelFormatError("bad catalog_id");
    } catch (const std::out_of_range&) {
        throw ModelFormatError("bad catalog_id");
    }
}

void save_bundle(const LabelModelBundle& b, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write model " + path.string());
    out << bundle_to_json(b);
    if (!out) throw Error("write failed for " + path.string());
}

LabelModelBundle load_bundle(const std::filesystem::path& path, std::optional<std::uint64_t> expected_catalog) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read model " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    auto b = bundle_from_json(buf.str());
    if (expected_catalog && *expected_catalog != b.catalog_id) {
        throw CatalogMismatch(hex64(*expected_catalog), hex64(b.catalog_id));
    }
    return b;
}

}  // namespace biolabel::learners

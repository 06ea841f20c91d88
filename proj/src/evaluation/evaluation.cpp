#include "biolabel/evaluation/evaluation.hpp"
#include "biolabel/error.hpp"
#include "biolabel/util/random.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <exception>
#include <set>

namespace biolabel::evaluation {

using groundtruth::kLabelCount;
using nlohmann::ordered_json;

std::vector<std::size_t> FoldPlan::test_indices(std::size_t repeat, std::size_t f) const {
    std::vector<std::size_t> out;
    const auto& row = fold.at(repeat);
    for (std::size_t i = 0; i < row.size(); ++i) {
        if (row[i] == f) out.push_back(i);
    }
    return out;
}

std::vector<std::size_t> FoldPlan::train_indices(std::size_t repeat, std::size_t f) const {
    std::vector<std::size_t> out;
    const auto& row = fold.at(repeat);
    for (std::size_t i = 0; i < row.size(); ++i) {
        if (row[i] != f) out.push_back(i);
    }
    return out;
}

FoldPlan make_fold_plan(const std::vector<LabelSet>& targets, const std::vector<Label>& labels, std::size_t k,
                        std::size_t repeats, std::uint64_t seed) {
    if (k < 2) throw Error("cross-validation needs k >= 2");
    if (targets.size() < k) throw TooFewRecords(targets.size(), k);

    std::array<std::size_t, kLabelCount> positives{};
    for (const auto& t : targets) {
        for (std::size_t l = 0; l < kLabelCount; ++l) positives[l] += t.test(l);
    }
    // Evaluated labels from rarest to most common; the position is the group.
    std::vector<Label> by_rarity = labels;
    std::stable_sort(by_rarity.begin(), by_rarity.end(), [&](Label a, Label b) {
        return positives[static_cast<std::size_t>(a)] < positives[static_cast<std::size_t>(b)];
    });
    std::vector<std::vector<std::size_t>> groups(by_rarity.size() + 1);
    for (std::size_t i = 0; i < targets.size(); ++i) {
        std::size_t g = by_rarity.size();
        for (std::size_t r = 0; r < by_rarity.size(); ++r) {
            if (groundtruth::has(targets[i], by_rarity[r])) {
                g = r;
                break;
            }
        }
        groups[g].push_back(i);
    }

    FoldPlan plan{k, repeats, seed, {}};
    util::Rng rng(seed);
    for (std::size_t r = 0; r < repeats; ++r) {
        std::vector<std::uint32_t> fold(targets.size());
        std::size_t next = 0;
        for (auto members : groups) {
            util::shuffle(members, rng);
            for (auto i : members) fold[i] = static_cast<std::uint32_t>(next++ % k);
        }
        plan.fold.push_back(std::move(fold));
    }
    return plan;
}

std::uint64_t fold_seed(std::uint64_t seed, std::size_t repeat, std::size_t fold) noexcept {
    std::uint64_t z = seed ^ (0x9e3779b97f4a7c15ULL * (repeat * 1009 + fold + 1));
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

Learner algorithm_learner(learners::Algorithm a, const learners::Hyperparameters& hp) {
    return [a, hp](const TrainingMatrix& train, const TrainingMatrix& test, std::uint64_t seed) {
        const auto bundle = learners::train_bundle(train, a, hp, seed);
        FoldOutput out;
        out.warnings = bundle.warnings;
        out.predictions.reserve(test.size());
        for (std::size_t i = 0; i < test.size(); ++i) {
            LabelSet s;
            for (auto l : learners::classify(bundle, test.vector(i)).labels()) groundtruth::add(s, l);
            out.predictions.push_back(s);
        }
        return out;
    };
}

std::optional<double> Confusion::precision() const {
    if (tp + fp == 0) return std::nullopt;
    return static_cast<double>(tp) / static_cast<double>(tp + fp);
}

std::optional<double> Confusion::recall() const {
    if (tp + fn == 0) return std::nullopt;
    return static_cast<double>(tp) / static_cast<double>(tp + fn);
}

Confusion& Confusion::operator+=(const Confusion& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    tn += o.tn;
    return *this;
}

namespace {

void median_mean(std::vector<double> v, std::optional<double>& median, std::optional<double>& mean) {
    if (v.empty()) return;
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    median = n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
    double s = 0;
    for (double x : v) s += x;
    mean = s / static_cast<double>(n);
}

}  // namespace

Summary summarize(const std::vector<Confusion>& per_repeat) {
    Summary s;
    std::vector<double> p, r;
    for (const auto& c : per_repeat) {
        if (auto x = c.precision()) {
            p.push_back(*x);
        } else {
            ++s.undefined_precision;
        }
        if (auto x = c.recall()) {
            r.push_back(*x);
        } else {
            ++s.undefined_recall;
        }
    }
    median_mean(std::move(p), s.median_precision, s.mean_precision);
    median_mean(std::move(r), s.median_recall, s.mean_recall);
    return s;
}

const CellMetrics& MetricsReport::cell(std::string_view algorithm, Label label) const {
    for (const auto& c : cells) {
        if (c.algorithm == algorithm && c.label == label) return c;
    }
    throw Error("no metrics for " + std::string(algorithm) + "/" + std::string(groundtruth::label_name(label)));
}

MetricsReport cross_validate(const TrainingMatrix& matrix, const std::vector<NamedLearner>& learners,
                             const std::vector<Label>& labels, std::size_t k, std::size_t repeats,
                             std::uint64_t seed, Execution exec) {
    std::vector<LabelSet> targets(matrix.size());
    for (std::size_t i = 0; i < matrix.size(); ++i) targets[i] = matrix.targets(i);
    const auto plan = make_fold_plan(targets, labels, k, repeats, seed);

    const std::size_t tasks = repeats * k;
    const std::size_t nl = labels.size();
    // counts[task][learner * nl + label]
    std::vector<std::vector<Confusion>> counts(tasks, std::vector<Confusion>(learners.size() * nl));
    std::vector<std::vector<std::string>> warnings(tasks);
    std::exception_ptr failure;

#pragma omp parallel for schedule(dynamic) if (exec == Execution::Parallel)
    for (std::size_t t = 0; t < tasks; ++t) {
        try {
            const std::size_t r = t / k, f = t % k;
            const auto test_idx = plan.test_indices(r, f);
            const auto train = matrix.subset(plan.train_indices(r, f));
            const auto test = matrix.subset(test_idx);
            for (std::size_t a = 0; a < learners.size(); ++a) {
                auto out = learners[a].learner(train, test, fold_seed(seed, r, f));
                if (out.predictions.size() != test.size()) throw Error("learner returned the wrong prediction count");
                for (auto& w : out.warnings) warnings[t].push_back(learners[a].name + ": " + w);
                for (std::size_t i = 0; i < test.size(); ++i) {
                    for (std::size_t l = 0; l < nl; ++l) {
                        const bool y = groundtruth::has(test.targets(i), labels[l]);
                        const bool p = groundtruth::has(out.predictions[i], labels[l]);
                        auto& c = counts[t][a * nl + l];
                        (p ? (y ? c.tp : c.fp) : (y ? c.fn : c.tn))++;
                    }
                }
            }
        } catch (...) {
#pragma omp critical(biolabel_cv_failure)
            if (!failure) failure = std::current_exception();
        }
    }
    if (failure) std::rethrow_exception(failure);

    MetricsReport report;
    report.k = k;
    report.repeats = repeats;
    report.seed = seed;
    report.records = matrix.size();
    report.labels = labels;
    for (const auto& l : learners) report.algorithms.push_back(l.name);
    for (std::size_t a = 0; a < learners.size(); ++a) {
        for (std::size_t l = 0; l < nl; ++l) {
            CellMetrics cell{learners[a].name, labels[l], std::vector<Confusion>(repeats), {}, {}};
            for (std::size_t t = 0; t < tasks; ++t) cell.per_repeat[t / k] += counts[t][a * nl + l];
            for (const auto& c : cell.per_repeat) cell.total += c;
            cell.summary = summarize(cell.per_repeat);
            report.cells.push_back(std::move(cell));
        }
    }
    std::set<std::string> unique;
    for (auto& ws : warnings) unique.insert(ws.begin(), ws.end());
    report.warnings.assign(unique.begin(), unique.end());
    return report;
}

MetricsReport cross_validate(const groundtruth::Dataset& dataset, const features::Catalog& catalog,
                             const std::vector<learners::Algorithm>& algorithms, const std::vector<Label>& labels,
                             std::size_t k, std::size_t repeats, std::uint64_t seed,
                             const learners::Hyperparameters& hp, Execution exec) {
    const auto matrix = TrainingMatrix::from_dataset(dataset, catalog);
    std::vector<NamedLearner> named;
    for (auto a : algorithms) named.push_back({std::string(learners::algorithm_name(a)), algorithm_learner(a, hp)});
    return cross_validate(matrix, named, labels, k, repeats, seed, exec);
}

std::string column_name(Label l) {
    if (l == Label::AUTHENTICATE) return "Auth";
    std::string s(groundtruth::label_name(l));
    for (std::size_t i = 1; i < s.size(); ++i) s[i] = static_cast<char>(std::tolower(static_cast<unsigned char>(s[i])));
    return s;
}

std::vector<ComparisonRow> comparison(const MetricsReport& report, const std::vector<Label>& columns, Statistic s) {
    std::vector<ComparisonRow> rows;
    for (const auto& alg : report.algorithms) {
        ComparisonRow row{alg, {}, {}, {}, {}};
        std::vector<double> ps, rs;
        for (auto l : columns) {
            const auto& sum = report.cell(alg, l).summary;
            const auto p = s == Statistic::Median ? sum.median_precision : sum.mean_precision;
            const auto r = s == Statistic::Median ? sum.median_recall : sum.mean_recall;
            row.precision.push_back(p);
            row.recall.push_back(r);
            if (p) ps.push_back(*p);
            if (r) rs.push_back(*r);
        }
        auto mean = [](const std::vector<double>& v) -> std::optional<double> {
            if (v.empty()) return std::nullopt;
            double t = 0;
            for (double x : v) t += x;
            return t / static_cast<double>(v.size());
        };
        row.average_precision = mean(ps);
        row.average_recall = mean(rs);
        rows.push_back(std::move(row));
    }
    return rows;
}

namespace {

std::string cell_text(const std::optional<double>& v) {
    if (!v) return "/";
    char buf[16];
    std::snprintf(buf, sizeof buf, "%.4f", *v);
    return buf;
}

std::string pad(std::string s, std::size_t width) {
    if (s.size() < width) s.append(width - s.size(), ' ');
    return s;
}

ordered_json opt(const std::optional<double>& v) { return v ? ordered_json(*v) : ordered_json(nullptr); }

}  // namespace

std::string render_text(const MetricsReport& report, const std::vector<Label>& columns) {
    std::size_t name_w = 9;
    for (const auto& a : report.algorithms) name_w = std::max(name_w, a.size());
    name_w += 2;
    constexpr std::size_t kCol = 8;

    std::string out;
    for (auto stat : {Statistic::Median, Statistic::Mean}) {
        out += stat == Statistic::Median ? "Median" : "Mean";
        out += " precision (P) and recall (R) over " + std::to_string(report.repeats) + " repeats of " +
               std::to_string(report.k) + "-fold cross-validation, " + std::to_string(report.records) +
               " records\n";
        std::string head1 = pad("", name_w), head2 = pad("Algorithm", name_w);
        for (auto l : columns) {
            head1 += pad(column_name(l), 2 * kCol);
            head2 += pad("P", kCol) + pad("R", kCol);
        }
        head1 += "Average";
        head2 += pad("P", kCol) + "R";
        out += head1 + "\n" + head2 + "\n";
        for (const auto& row : comparison(report, columns, stat)) {
            std::string line = pad(row.algorithm, name_w);
            for (std::size_t c = 0; c < columns.size(); ++c) {
                line += pad(cell_text(row.precision[c]), kCol) + pad(cell_text(row.recall[c]), kCol);
            }
            line += pad(cell_text(row.average_precision), kCol) + cell_text(row.average_recall);
            out += line + "\n";
        }
        out += "\n";
    }
    if (!report.warnings.empty()) {
        out += "Warnings:\n";
        for (const auto& w : report.warnings) out += "  " + w + "\n";
    }
    return out;
}

std::string render_json(const MetricsReport& report, const std::vector<Label>& columns) {
    ordered_json j;
    j["k"] = report.k;
    j["repeats"] = report.repeats;
    j["seed"] = report.seed;
    j["records"] = report.records;
    j["rows"] = ordered_json::array();
    j["summary"] = ordered_json::array();
    for (const auto& c : report.cells) {
        const auto label = groundtruth::label_name(c.label);
        for (std::size_t r = 0; r < c.per_repeat.size(); ++r) {
            const auto& x = c.per_repeat[r];
            j["rows"].push_back({{"algorithm", c.algorithm},
                                 {"label", label},
                                 {"repeat", r},
                                 {"precision", opt(x.precision())},
                                 {"recall", opt(x.recall())},
                                 {"tp", x.tp},
                                 {"fp", x.fp},
                                 {"fn", x.fn},
                                 {"tn", x.tn}});
        }
        j["summary"].push_back({{"algorithm", c.algorithm},
                                {"label", label},
                                {"median_precision", opt(c.summary.median_precision)},
                                {"mean_precision", opt(c.summary.mean_precision)},
                                {"median_recall", opt(c.summary.median_recall)},
                                {"mean_recall", opt(c.summary.mean_recall)},
                                {"undefined_precision", c.summary.undefined_precision},
                                {"undefined_recall", c.summary.undefined_recall},
                                {"tp", c.total.tp},
                                {"fp", c.total.fp},
                                {"fn", c.total.fn},
                                {"tn", c.total.tn}});
    }
    ordered_json table;
    ordered_json cols = ordered_json::array();
    for (auto l : columns) cols.push_back(column_name(l));
    cols.push_back("Average");
    table["columns"] = cols;
    for (auto stat : {Statistic::Median, Statistic::Mean}) {
        ordered_json rows = ordered_json::array();
        for (const auto& row : comparison(report, columns, stat)) {
            ordered_json p = ordered_json::array(), r = ordered_json::array();
            for (std::size_t c = 0; c < columns.size(); ++c) {
                p.push_back(opt(row.precision[c]));
                r.push_back(opt(row.recall[c]));
            }
            p.push_back(opt(row.average_precision));
            r.push_back(opt(row.average_recall));
            rows.push_back({{"algorithm", row.algorithm}, {"precision", p}, {"recall", r}});
        }
        table[stat == Statistic::Median ? "median" : "mean"] = rows;
    }
    j["comparison"] = table;
    j["warnings"] = report.warnings;
    return j.dump(1) + "\n";
}

}  // namespace biolabel::evaluation

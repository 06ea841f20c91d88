#include "biolabel/learners/learners.hpp"

#include "common.hpp"

#include <cmath>

namespace biolabel::learners {

namespace {

double leaf_score(double pos, double n) { return 2.0 * (pos + 1.0) / (n + 2.0) - 1.0; }

double entropy(double pos, double n) {
    if (n <= 0 || pos <= 0 || pos >= n) return 0.0;
    const double p = pos / n, q = 1.0 - p;
    return -(p * std::log2(p) + q * std::log2(q));
}

struct Counts {
    std::vector<std::size_t> set;      // rows with the bit set, per feature
    std::vector<std::size_t> set_pos;  // ... of which positive
    std::size_t n = 0, pos = 0;
};

Counts count(const TrainingMatrix& m, Label label, std::span<const std::size_t> rows) {
    Counts c;
    c.set.assign(m.features(), 0);
    c.set_pos.assign(m.features(), 0);
    for (auto i : rows) {
        const bool y = m.target(i, label);
        ++c.n;
        c.pos += y;
        for (auto j : m.row(i)) {
            ++c.set[j];
            c.set_pos[j] += y;
        }
    }
    return c;
}

double ratio_from_counts(const Counts& c, std::size_t j) {
    const double n = static_cast<double>(c.n);
    const double ns = static_cast<double>(c.set[j]), nc = n - ns;
    if (ns == 0 || nc == 0) return 0.0;
    const double ps = static_cast<double>(c.set_pos[j]), pc = static_cast<double>(c.pos) - ps;
    const double gain = entropy(static_cast<double>(c.pos), n) - (ns / n) * entropy(ps, ns) - (nc / n) * entropy(pc, nc);
    const double split_info = entropy(ns, n);
    return gain / split_info;
}

class TreeBuilder {
public:
    TreeBuilder(const TrainingMatrix& m, Label label, std::size_t max_depth, std::size_t min_leaf)
        : m_(m), label_(label), max_depth_(max_depth), min_leaf_(std::max<std::size_t>(min_leaf, 1)) {}

    std::int32_t build(std::vector<std::size_t> rows, std::size_t depth) {
        const auto c = count(m_, label_, rows);
        const auto id = static_cast<std::int32_t>(tree.nodes.size());
        tree.nodes.push_back({-1, -1, -1, leaf_score(static_cast<double>(c.pos), static_cast<double>(c.n))});
        if (depth >= max_depth_ || c.pos == 0 || c.pos == c.n) return id;

        std::int64_t best = -1;
        double best_ratio = 0;
        for (std::size_t j = 0; j < m_.features(); ++j) {
            if (c.set[j] < min_leaf_ || c.n - c.set[j] < min_leaf_) continue;
            const double r = ratio_from_counts(c, j);
            if (best < 0 || r > best_ratio) best = static_cast<std::int64_t>(j), best_ratio = r;
        }
        if (best < 0) return id;

        std::vector<std::size_t> clear, set;
        for (auto i : rows) (m_.bit(i, static_cast<std::size_t>(best)) ? set : clear).push_back(i);
        rows.clear();
        rows.shrink_to_fit();
        const auto clear_id = build(std::move(clear), depth + 1);
        const auto set_id = build(std::move(set), depth + 1);
        auto& node = tree.nodes[static_cast<std::size_t>(id)];
        node.feature = static_cast<std::int32_t>(best);
        node.clear = clear_id;
        node.set = set_id;
        return id;
    }

    TreeModel tree;

private:
    const TrainingMatrix& m_;
    Label label_;
    std::size_t max_depth_;
    std::size_t min_leaf_;
};

}  // namespace

std::size_t stump_errors(const TrainingMatrix& m, Label label, std::size_t feature) {
    std::size_t ps = 0, ns = 0, pc = 0, nc = 0;
    for (std::size_t i = 0; i < m.size(); ++i) {
        const bool y = m.target(i, label);
        if (m.bit(i, feature)) {
            (y ? ps : ns)++;
        } else {
            (y ? pc : nc)++;
        }
    }
    return std::min(ps, ns) + std::min(pc, nc);
}

TrainResult train_stump(const TrainingMatrix& m, Label label) {
    if (auto c = detail::degenerate(m, label)) return std::move(*c);

    std::vector<std::size_t> all(m.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    const auto c = count(m, label, all);
    std::size_t best = 0, best_err = static_cast<std::size_t>(-1);
    for (std::size_t j = 0; j < m.features(); ++j) {
        const std::size_t ps = c.set_pos[j], ns = c.set[j] - ps;
        const std::size_t pc = c.pos - ps, nc = (c.n - c.set[j]) - pc;
        const std::size_t err = std::min(ps, ns) + std::min(pc, nc);
        if (err < best_err) best = j, best_err = err;
    }
    const double ns = static_cast<double>(c.set[best]);
    const double ps = static_cast<double>(c.set_pos[best]);
    StumpModel s;
    s.feature = static_cast<std::uint32_t>(best);
    s.score_set = leaf_score(ps, ns);
    s.score_clear = leaf_score(static_cast<double>(c.pos) - ps, static_cast<double>(c.n) - ns);
    return {s, std::nullopt};
}

double gain_ratio(const TrainingMatrix& m, Label label, std::span<const std::size_t> rows, std::size_t feature) {
    return ratio_from_counts(count(m, label, rows), feature);
}

TrainResult train_tree(const TrainingMatrix& m, Label label, std::size_t max_depth, std::size_t min_leaf) {
    if (auto c = detail::degenerate(m, label)) return std::move(*c);
    TreeBuilder b(m, label, max_depth, min_leaf);
    std::vector<std::size_t> all(m.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    b.build(std::move(all), 0);
    return {std::move(b.tree), std::nullopt};
}

}  // namespace biolabel::learners

#include "biolabel/learners/learners.hpp"
#include "biolabel/util/random.hpp"

#include "common.hpp"

#include <cmath>
#include <numeric>

namespace biolabel::learners {

namespace {

double sigmoid(double z) {
    if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

// log(1 + e^z)
double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

double logit_of(const LinearModel& p, const std::vector<std::uint32_t>& row) {
    double z = p.bias;
    for (auto j : row) z += p.weights[j];
    return z;
}

}  // namespace

double logistic_objective(const TrainingMatrix& m, Label label, const LinearModel& p, double l2) {
    double loss = 0;
    for (std::size_t i = 0; i < m.size(); ++i) {
        const double z = logit_of(p, m.row(i));
        loss += softplus(z) - (m.target(i, label) ? z : 0.0);
    }
    double norm2 = 0;
    for (double w : p.weights) norm2 += w * w;
    return loss / static_cast<double>(m.size()) + 0.5 * l2 * norm2;
}

LinearModel logistic_gradient(const TrainingMatrix& m, Label label, const LinearModel& p, double l2) {
    LinearModel g;
    g.weights.assign(p.weights.size(), 0.0);
    const double inv_n = 1.0 / static_cast<double>(m.size());
    for (std::size_t i = 0; i < m.size(); ++i) {
        const double r = (sigmoid(logit_of(p, m.row(i))) - (m.target(i, label) ? 1.0 : 0.0)) * inv_n;
        g.bias += r;
        for (auto j : m.row(i)) g.weights[j] += r;
    }
    for (std::size_t j = 0; j < p.weights.size(); ++j) g.weights[j] += l2 * p.weights[j];
    return g;
}

TrainResult train_logistic(const TrainingMatrix& m, Label label, double l2, std::size_t epochs,
                           double learning_rate, std::uint64_t seed) {
    if (auto c = detail::degenerate(m, label)) return std::move(*c);

    // w = scale * v, so the l2 shrink is O(1) per step.
    const std::size_t d = m.features();
    std::vector<double> v(d, 0.0);
    double scale = 1.0, bias = 0.0;
    const double shrink = 1.0 - learning_rate * l2;

    std::vector<std::size_t> order(m.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    util::Rng rng(seed);
    for (std::size_t e = 0; e < epochs; ++e) {
        util::shuffle(order, rng);
        for (auto i : order) {
            const auto& row = m.row(i);
            double z = 0;
            for (auto j : row) z += v[j];
            z = z * scale + bias;
            const double g = sigmoid(z) - (m.target(i, label) ? 1.0 : 0.0);
            scale *= shrink;
            if (scale < 1e-6) {
                for (auto& x : v) x *= scale;
                scale = 1.0;
            }
            const double step = learning_rate * g / scale;
            for (auto j : row) v[j] -= step;
            bias -= learning_rate * g;
        }
    }
    LinearModel out;
    out.weights.resize(d);
    for (std::size_t j = 0; j < d; ++j) out.weights[j] = v[j] * scale;
    out.bias = bias;
    return {std::move(out), std::nullopt};
}

}  // namespace biolabel::learners

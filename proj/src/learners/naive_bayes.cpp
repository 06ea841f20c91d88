#include "biolabel/learners/learners.hpp"

#include "common.hpp"

#include <cmath>

namespace biolabel::learners {

TrainResult train_naive_bayes(const TrainingMatrix& m, Label label, double alpha) {
    if (auto c = detail::degenerate(m, label)) return std::move(*c);

    const std::size_t d = m.features();
    std::vector<double> on_pos(d, 0.0), on_neg(d, 0.0);
    double n_pos = 0, n_neg = 0;
    for (std::size_t i = 0; i < m.size(); ++i) {
        const bool y = m.target(i, label);
        (y ? n_pos : n_neg) += 1;
        auto& counts = y ? on_pos : on_neg;
        for (auto j : m.row(i)) counts[j] += 1;
    }

    NaiveBayesModel nb;
    nb.base = std::log(n_pos / n_neg);
    nb.delta.resize(d);
    for (std::size_t j = 0; j < d; ++j) {
        const double tp = (on_pos[j] + alpha) / (n_pos + 2 * alpha);
        const double tn = (on_neg[j] + alpha) / (n_neg + 2 * alpha);
        const double absent = std::log((1 - tp) / (1 - tn));
        nb.base += absent;
        nb.delta[j] = std::log(tp / tn) - absent;
    }
    return {std::move(nb), std::nullopt};
}

}  // namespace biolabel::learners

#include "biolabel/learners/learners.hpp"
#include "biolabel/util/random.hpp"

#include "common.hpp"

#include <cmath>
#include <map>
#include <numeric>

namespace biolabel::learners {

namespace {

struct Point {
    const std::vector<std::uint32_t>* row;
    double y;       // +1 / -1
    double weight;  // multiplicity times class weight
};

// Identical (row, target) pairs collapse into one weighted point; class
// weights are n / (2 * n_class).
std::vector<Point> weighted_points(const TrainingMatrix& m, Label label) {
    const double n = static_cast<double>(m.size());
    const double pos = static_cast<double>(m.positives(label));
    const double w_pos = n / (2.0 * pos), w_neg = n / (2.0 * (n - pos));
    std::map<std::pair<const std::vector<std::uint32_t>*, bool>, std::size_t,
             decltype([](const auto& a, const auto& b) {
                 if (*a.first != *b.first) return *a.first < *b.first;
                 return a.second < b.second;
             })>
        groups;
    for (std::size_t i = 0; i < m.size(); ++i) ++groups[{&m.row(i), m.target(i, label)}];
    std::vector<Point> out;
    out.reserve(groups.size());
    for (const auto& [key, mult] : groups) {
        out.push_back({key.first, key.second ? 1.0 : -1.0, static_cast<double>(mult) * (key.second ? w_pos : w_neg)});
    }
    return out;
}

double objective(const std::vector<Point>& pts, const std::vector<double>& w, double lambda) {
    // w.back() is the bias weight.
    const std::size_t d = w.size() - 1;
    double loss = 0, total = 0;
    for (const auto& p : pts) {
        double z = w[d];
        for (auto j : *p.row) z += w[j];
        loss += p.weight * std::max(0.0, 1.0 - p.y * z);
        total += p.weight;
    }
    double norm2 = 0;
    for (double x : w) norm2 += x * x;
    return 0.5 * lambda * norm2 + loss / total;
}

}  // namespace

double svm_objective(const TrainingMatrix& m, Label label, const LinearModel& params, double lambda) {
    auto w = params.weights;
    w.push_back(params.bias);
    return objective(weighted_points(m, label), w, lambda);
}

TrainResult train_svm(const TrainingMatrix& m, Label label, double lambda, std::size_t epochs, std::uint64_t seed,
                      std::vector<double>* trace) {
    if (auto c = detail::degenerate(m, label)) return std::move(*c);

    const auto pts = weighted_points(m, label);
    const std::size_t d = m.features();  // index d is the bias
    double total = 0;
    for (const auto& p : pts) total += p.weight;
    const double u = static_cast<double>(pts.size());
    const double radius = 1.0 / std::sqrt(lambda);

    // Pegasos with projection onto the 1/sqrt(lambda) ball; w = scale * v.
    std::vector<double> v(d + 1, 0.0), sum(d + 1, 0.0);
    double scale = 1.0, norm2 = 0.0;  // norm2 = |v|^2
    std::vector<std::size_t> order(pts.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    util::Rng rng(seed);
    std::size_t t = 0;
    if (trace) trace->clear();
    std::vector<double> best(d + 1, 0.0);
    double best_obj = objective(pts, best, lambda);
    double weight_sum = 0.0;

    for (std::size_t e = 0; e < epochs; ++e) {
        util::shuffle(order, rng);
        for (auto k : order) {
            const auto& p = pts[k];
            ++t;
            const double eta = 1.0 / (lambda * static_cast<double>(t));
            double z = v[d];
            for (auto j : *p.row) z += v[j];
            z *= scale;

            if (t == 1) {
                std::fill(v.begin(), v.end(), 0.0);
                scale = 1.0;
                norm2 = 0.0;
            } else {
                scale *= 1.0 - eta * lambda;
            }
            if (p.y * z < 1.0) {
                const double step = eta * (u * p.weight / total) * p.y / scale;
                auto bump = [&](std::size_t j) {
                    norm2 += step * (2.0 * v[j] + step);
                    v[j] += step;
                };
                for (auto j : *p.row) bump(j);
                bump(d);
            }
            const double norm = std::abs(scale) * std::sqrt(std::max(norm2, 0.0));
            if (norm > radius) scale *= radius / norm;
            if (scale < 1e-9) {
                for (auto& x : v) x *= scale;
                norm2 *= scale * scale;
                scale = 1.0;
            }
        }
        // End-of-epoch iterates are averaged with weight e + 1, so the early
        // large-step iterates fade out.
        const double weight = static_cast<double>(e + 1);
        norm2 = 0;
        for (std::size_t j = 0; j <= d; ++j) {
            norm2 += v[j] * v[j];
            sum[j] += weight * scale * v[j];
        }
        weight_sum += weight;
        // The average is only kept when it does not raise the objective, so
        // the returned model never regresses.
        std::vector<double> avg(d + 1);
        for (std::size_t j = 0; j <= d; ++j) avg[j] = sum[j] / weight_sum;
        const double obj = objective(pts, avg, lambda);
        if (obj <= best_obj) {
            best_obj = obj;
            best = std::move(avg);
        }
        if (trace) trace->push_back(best_obj);
    }

    LinearModel out;
    out.weights.assign(best.begin(), best.end() - 1);
    out.bias = best.back();
    return {std::move(out), std::nullopt};
}

}  // namespace biolabel::learners

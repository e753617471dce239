#pragma once

// Brute-force reference implementations used to validate the production
// code. Everything here is written the naive way on purpose: plain
// probabilities, full enumeration over labels, central finite differences.

#include <cmath>
#include <functional>
#include <vector>

#include "crowdagg/data.hpp"
#include "crowdagg/gem.hpp"

namespace oracle {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Answer probability under the fitted model family: honest workers answer
// the truth when they solve the task, wrong-doers pick a uniformly random
// wrong label when they solve it, both guess uniformly otherwise.
inline double answer_prob(const crowdagg::GemParams& p, int worker, int task, int k,
                          int truth, int answer) {
    double delta = p.slope[static_cast<size_t>(worker)] *
                   (p.skill[static_cast<size_t>(worker)] -
                    p.difficulty[static_cast<size_t>(task)]);
    double s = sigmoid(delta);
    if (p.intention[static_cast<size_t>(worker)]) {
        return answer == truth ? s + (1.0 - s) / k : (1.0 - s) / k;
    }
    return answer == truth ? (1.0 - s) / k : (1.0 - s) / k + s / (k - 1);
}

// Marginal likelihood of one task's answers: the known-label product for a
// probe, otherwise the uniform mixture over all k labels.
inline double task_likelihood(const crowdagg::AnswerMatrix& m, const crowdagg::ProbeSet& probes,
                              const crowdagg::GemParams& p, int task) {
    auto product_given = [&](int z) {
        double prod = 1.0;
        for (const crowdagg::AnswerEntry& e : m.task_entries(task))
            prod *= answer_prob(p, e.worker, task, m.k(), z, e.answer);
        return prod;
    };
    if (probes.is_probe(task)) return product_given(probes.label(task));
    double total = 0.0;
    for (int z = 1; z <= m.k(); ++z) total += product_given(z) / m.k();
    return total;
}

inline double log_likelihood(const crowdagg::AnswerMatrix& m, const crowdagg::ProbeSet& probes,
                             const crowdagg::GemParams& p) {
    double ll = 0.0;
    for (int i = 0; i < m.n_tasks(); ++i) ll += std::log(task_likelihood(m, probes, p, i));
    return ll;
}

// Posterior over one task's truth by direct Bayes; probe tasks are one-hot.
inline std::vector<double> posterior(const crowdagg::AnswerMatrix& m,
                                     const crowdagg::ProbeSet& probes,
                                     const crowdagg::GemParams& p, int task) {
    std::vector<double> out(static_cast<size_t>(m.k()), 0.0);
    if (probes.is_probe(task)) {
        out[static_cast<size_t>(probes.label(task) - 1)] = 1.0;
        return out;
    }
    double total = 0.0;
    for (int z = 1; z <= m.k(); ++z) {
        double prod = 1.0;
        for (const crowdagg::AnswerEntry& e : m.task_entries(task))
            prod *= answer_prob(p, e.worker, task, m.k(), z, e.answer);
        out[static_cast<size_t>(z - 1)] = prod;
        total += prod;
    }
    for (double& v : out) v /= total;
    return out;
}

// Central finite difference of `f` in one coordinate of a parameter vector.
inline double central_diff(const std::function<double()>& f, double& coord, double h) {
    double saved = coord;
    coord = saved + h;
    double hi = f();
    coord = saved - h;
    double lo = f();
    coord = saved;
    return (hi - lo) / (2.0 * h);
}

}  // namespace oracle

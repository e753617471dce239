#include "crowdagg/plurality.hpp"

#include <algorithm>
#include <cmath>

#include "crowdagg/error.hpp"
#include "crowdagg/rng.hpp"

namespace crowdagg {

namespace {

constexpr int kIterationCap = 500;
constexpr double kWeightTol = 1e-9;

// Picks the argmax label; exact ties are resolved by a seeded uniform draw.
int argmax_label(const std::vector<double>& score, int k, Rng& rng) {
    double best = score[1];
    for (int c = 2; c <= k; ++c) best = std::max(best, score[static_cast<size_t>(c)]);
    int n_tied = 0;
    for (int c = 1; c <= k; ++c)
        if (score[static_cast<size_t>(c)] == best) ++n_tied;
    if (n_tied == 1) {
        for (int c = 1; c <= k; ++c)
            if (score[static_cast<size_t>(c)] == best) return c;
    }
    int pick = rng.next_below(n_tied);
    for (int c = 1; c <= k; ++c) {
        if (score[static_cast<size_t>(c)] == best && pick-- == 0) return c;
    }
    throw InternalError("argmax tie resolution fell through");
}

// Per-worker agreement bookkeeping against a set of decisions.
struct AgreementCounts {
    std::vector<int> agree;
    std::vector<int> total;
};

AgreementCounts count_agreement(const AnswerMatrix& m, const InferredAnswers& decisions) {
    AgreementCounts c;
    c.agree.assign(static_cast<size_t>(m.n_workers()), 0);
    c.total.assign(static_cast<size_t>(m.n_workers()), 0);
    for (const AnswerEntry& e : m.entries()) {
        ++c.total[static_cast<size_t>(e.worker)];
        if (e.answer == decisions.label[static_cast<size_t>(e.task)])
            ++c.agree[static_cast<size_t>(e.worker)];
    }
    return c;
}

enum class Scheme { kAgreementOnly, kIntentions, kSigned };

// One decision pass: per task, score every label and take the argmax.
// Probe tasks are clamped to their known labels.
InferredAnswers decide(const AnswerMatrix& m, const ProbeSet& probes,
                       const std::vector<double>& w, const std::vector<int>* intentions,
                       Scheme scheme, Rng& rng) {
    const int k = m.k();
    InferredAnswers out;
    out.label.assign(static_cast<size_t>(m.n_tasks()), 0);
    std::vector<double> score(static_cast<size_t>(k) + 1);
    for (int i = 0; i < m.n_tasks(); ++i) {
        if (probes.is_probe(i)) {
            out.label[static_cast<size_t>(i)] = probes.label(i);
            continue;
        }
        std::fill(score.begin(), score.end(), 0.0);
        switch (scheme) {
            case Scheme::kAgreementOnly:
                for (const AnswerEntry& e : m.task_entries(i))
                    score[static_cast<size_t>(e.answer)] += w[static_cast<size_t>(e.worker)];
                break;
            case Scheme::kIntentions: {
                // Flagged workers spread their weight over the labels they
                // did not pick.
                double flagged_total = 0.0;
                for (const AnswerEntry& e : m.task_entries(i)) {
                    if ((*intentions)[static_cast<size_t>(e.worker)]) {
                        score[static_cast<size_t>(e.answer)] += w[static_cast<size_t>(e.worker)];
                    } else {
                        flagged_total += w[static_cast<size_t>(e.worker)];
                        score[static_cast<size_t>(e.answer)] -=
                            w[static_cast<size_t>(e.worker)] / (k - 1);
                    }
                }
                if (flagged_total != 0.0)
                    for (int c = 1; c <= k; ++c) score[static_cast<size_t>(c)] += flagged_total / (k - 1);
                break;
            }
            case Scheme::kSigned: {
                double total = 0.0;
                for (const AnswerEntry& e : m.task_entries(i)) {
                    total += w[static_cast<size_t>(e.worker)];
                    score[static_cast<size_t>(e.answer)] +=
                        w[static_cast<size_t>(e.worker)] * (1.0 + 1.0 / (k - 1));
                }
                for (int c = 1; c <= k; ++c) score[static_cast<size_t>(c)] -= total / (k - 1);
                break;
            }
        }
        out.label[static_cast<size_t>(i)] = argmax_label(score, k, rng);
    }
    return out;
}

// Closed-form unit-energy weights maximizing the objective for fixed
// decisions (and intentions). Returns true if the uniform fallback was
// needed because every score was zero.
bool reweight(const AnswerMatrix& m, const AgreementCounts& counts,
              const std::vector<int>* intentions, Scheme scheme, std::vector<double>& w) {
    const int k = m.k();
    const int n = m.n_workers();
    std::vector<double> score(static_cast<size_t>(n), 0.0);
    for (int j = 0; j < n; ++j) {
        int agree = counts.agree[static_cast<size_t>(j)];
        int disagree = counts.total[static_cast<size_t>(j)] - agree;
        switch (scheme) {
            case Scheme::kAgreementOnly: score[static_cast<size_t>(j)] = agree; break;
            case Scheme::kIntentions:
                score[static_cast<size_t>(j)] = (*intentions)[static_cast<size_t>(j)]
                                                    ? static_cast<double>(agree)
                                                    : disagree / static_cast<double>(k - 1);
                break;
            case Scheme::kSigned:
                score[static_cast<size_t>(j)] = agree - disagree / static_cast<double>(k - 1);
                break;
        }
    }
    double energy = 0.0;
    for (double s : score) energy += s * s;
    if (energy == 0.0) {
        // No information at all; fall back to uniform over answering workers.
        int active = 0;
        for (int j = 0; j < n; ++j)
            if (counts.total[static_cast<size_t>(j)] > 0) ++active;
        double u = 1.0 / std::sqrt(static_cast<double>(active));
        for (int j = 0; j < n; ++j)
            w[static_cast<size_t>(j)] = counts.total[static_cast<size_t>(j)] > 0 ? u : 0.0;
        return true;
    }
    double norm = std::sqrt(energy);
    for (int j = 0; j < n; ++j) w[static_cast<size_t>(j)] = score[static_cast<size_t>(j)] / norm;
    return false;
}

void check_unit_energy(const std::vector<double>& w) {
    double energy = 0.0;
    for (double x : w) energy += x * x;
    if (std::abs(energy - 1.0) > 1e-9)
        throw InternalError("weight vector left the unit sphere");
}

double objective_from_counts(ObjectiveKind kind, int k, const AgreementCounts& counts,
                             const std::vector<double>& w, const std::vector<int>* intentions) {
    double psi = 0.0;
    for (size_t j = 0; j < w.size(); ++j) {
        double agree = counts.agree[j];
        double disagree = counts.total[j] - counts.agree[j];
        switch (kind) {
            case ObjectiveKind::kAgreement: psi += w[j] * agree; break;
            case ObjectiveKind::kIntentionAware:
                psi += (*intentions)[j] ? w[j] * agree : w[j] * disagree / (k - 1);
                break;
            case ObjectiveKind::kSigned: psi += w[j] * (agree - disagree / (k - 1)); break;
        }
    }
    return psi;
}

ObjectiveKind objective_for(Scheme scheme) {
    switch (scheme) {
        case Scheme::kAgreementOnly: return ObjectiveKind::kAgreement;
        case Scheme::kIntentions: return ObjectiveKind::kIntentionAware;
        default: return ObjectiveKind::kSigned;
    }
}

// Shared ascent loop. When `init` is given (the hybrid scheme) the first
// iteration keeps its decisions and goes straight to the weight update.
struct InitState {
    InferredAnswers decisions;
    std::vector<double> weights;
    std::vector<int> intentions;
};

PluralityResult ascend(const AnswerMatrix& m, const ProbeSet& probes, Scheme scheme,
                       std::uint64_t seed, const InitState* init) {
    const int n = m.n_workers();
    Rng rng(seed);
    PluralityResult res;
    res.weights.assign(static_cast<size_t>(n), 1.0 / std::sqrt(static_cast<double>(n)));
    if (scheme == Scheme::kIntentions) res.intentions.assign(static_cast<size_t>(n), 1);
    const std::vector<int>* v = scheme == Scheme::kIntentions ? &res.intentions : nullptr;
    const ObjectiveKind kind = objective_for(scheme);

    bool have_decisions = false;
    if (init) {
        res.decisions = init->decisions;
        res.weights = init->weights;
        if (scheme == Scheme::kIntentions) res.intentions = init->intentions;
        have_decisions = true;
        // Baseline objective of the seeded state, before any update.
        AgreementCounts counts = count_agreement(m, res.decisions);
        res.objective_trace.push_back(objective_from_counts(kind, m.k(), counts, res.weights, v));
    }

    for (int iter = 0; iter < kIterationCap; ++iter) {
        InferredAnswers prev_decisions = res.decisions;
        std::vector<double> prev_w = res.weights;
        std::vector<int> prev_v = res.intentions;

        if (!(iter == 0 && have_decisions))
            res.decisions = decide(m, probes, res.weights, v, scheme, rng);
        AgreementCounts counts = count_agreement(m, res.decisions);
        res.degenerate_weights |= reweight(m, counts, v, scheme, res.weights);
        check_unit_energy(res.weights);
        if (scheme == Scheme::kIntentions) {
            // A worker is flagged when their disagreement explains the
            // decisions better than their agreement; ties stay honest.
            for (int j = 0; j < n; ++j) {
                double wj = res.weights[static_cast<size_t>(j)];
                double agree = counts.agree[static_cast<size_t>(j)];
                double disagree = counts.total[static_cast<size_t>(j)] - agree;
                res.intentions[static_cast<size_t>(j)] =
                    wj * agree >= wj * disagree / (m.k() - 1) ? 1 : 0;
            }
        }
        res.objective_trace.push_back(objective_from_counts(kind, m.k(), counts, res.weights, v));
        res.iterations = iter + 1;

        double dw = 0.0;
        for (int j = 0; j < n; ++j)
            dw = std::max(dw, std::abs(res.weights[static_cast<size_t>(j)] -
                                       prev_w[static_cast<size_t>(j)]));
        // Convergence needs a full iteration including a decision pass, so
        // a seeded first iteration can never terminate by itself.
        if (iter > 0 && prev_decisions.label == res.decisions.label &&
            prev_v == res.intentions && dw < kWeightTol) {
            res.converged = true;
            return res;
        }
    }
    res.converged = false;
    return res;
}

}  // namespace

PluralityResult plu(const AnswerMatrix& m, std::uint64_t seed) {
    Rng rng(seed);
    const int k = m.k();
    PluralityResult res;
    res.decisions.label.assign(static_cast<size_t>(m.n_tasks()), 0);
    std::vector<double> score(static_cast<size_t>(k) + 1);
    for (int i = 0; i < m.n_tasks(); ++i) {
        std::fill(score.begin(), score.end(), 0.0);
        for (const AnswerEntry& e : m.task_entries(i)) score[static_cast<size_t>(e.answer)] += 1.0;
        res.decisions.label[static_cast<size_t>(i)] = argmax_label(score, k, rng);
    }
    res.iterations = 1;
    return res;
}

PluralityResult ss_plu(const AnswerMatrix& m, const ProbeSet& probes, std::uint64_t seed) {
    if (probes.empty()) throw ValidationError("probe-weighted plurality needs a non-empty probe set");
    Rng rng(seed);
    const int n = m.n_workers();
    PluralityResult res;
    res.weights.assign(static_cast<size_t>(n), 0.0);
    std::vector<int> seen(static_cast<size_t>(n), 0), right(static_cast<size_t>(n), 0);
    for (int t : probes.probe_tasks()) {
        for (const AnswerEntry& e : m.task_entries(t)) {
            ++seen[static_cast<size_t>(e.worker)];
            if (e.answer == probes.label(t)) ++right[static_cast<size_t>(e.worker)];
        }
    }
    for (int j = 0; j < n; ++j) {
        // Workers with no probe evidence get the chance-level prior 1/k.
        res.weights[static_cast<size_t>(j)] =
            seen[static_cast<size_t>(j)] > 0
                ? static_cast<double>(right[static_cast<size_t>(j)]) / seen[static_cast<size_t>(j)]
                : 1.0 / m.k();
    }
    res.decisions = decide(m, probes, res.weights, nullptr, Scheme::kAgreementOnly, rng);
    res.iterations = 1;
    return res;
}

PluralityResult us_wp(const AnswerMatrix& m, const ProbeSet& probes, std::uint64_t seed) {
    return ascend(m, probes, Scheme::kAgreementOnly, seed, nullptr);
}

PluralityResult us_sw(const AnswerMatrix& m, const ProbeSet& probes, std::uint64_t seed) {
    return ascend(m, probes, Scheme::kIntentions, seed, nullptr);
}

PluralityResult us_neg(const AnswerMatrix& m, const ProbeSet& probes, std::uint64_t seed) {
    return ascend(m, probes, Scheme::kSigned, seed, nullptr);
}

PluralityResult us_hyb(const AnswerMatrix& m, const ProbeSet& probes, std::uint64_t seed) {
    PluralityResult first = us_neg(m, probes, mix64(seed, 1));
    InitState init;
    init.decisions = std::move(first.decisions);
    init.weights.resize(first.weights.size());
    init.intentions.resize(first.weights.size());
    for (size_t j = 0; j < first.weights.size(); ++j) {
        init.weights[j] = std::abs(first.weights[j]);
        init.intentions[j] = first.weights[j] >= 0.0 ? 1 : 0;
    }
    PluralityResult res = ascend(m, probes, Scheme::kIntentions, mix64(seed, 2), &init);
    res.degenerate_weights |= first.degenerate_weights;
    return res;
}

double objective(ObjectiveKind kind, const AnswerMatrix& m, const InferredAnswers& decisions,
                 const std::vector<double>& weights, const std::vector<int>* intentions) {
    if (static_cast<int>(decisions.label.size()) != m.n_tasks())
        throw ValidationError("decision vector size does not match task count");
    if (static_cast<int>(weights.size()) != m.n_workers())
        throw ValidationError("weight vector size does not match worker count");
    if (kind == ObjectiveKind::kIntentionAware &&
        (!intentions || static_cast<int>(intentions->size()) != m.n_workers()))
        throw ValidationError("intention vector size does not match worker count");
    AgreementCounts counts = count_agreement(m, decisions);
    return objective_from_counts(kind, m.k(), counts, weights, intentions);
}

}  // namespace crowdagg

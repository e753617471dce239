#include "crowdagg/gem.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "crowdagg/csv.hpp"
#include "crowdagg/error.hpp"
#include "crowdagg/rng.hpp"

namespace crowdagg {

namespace {

constexpr double kSkillClip = 50.0;
constexpr double kDiffClip = 50.0;
constexpr double kSlopeClip = 1.0;
constexpr double kInitSkillClip = 5.0;
constexpr double kMinStep = 1e-14;
constexpr double kArmijo = 1e-4;
constexpr double kMaxStep = 64.0;
constexpr double kTraceSlack = 1e-9;

double clip(double x, double bound) { return std::clamp(x, -bound, bound); }

void validate(const AnswerMatrix& m, const ProbeSet& probes, const GemParams& p) {
    if (static_cast<int>(p.intention.size()) != m.n_workers() ||
        static_cast<int>(p.skill.size()) != m.n_workers() ||
        static_cast<int>(p.slope.size()) != m.n_workers())
        throw ValidationError("worker parameter size does not match matrix");
    if (static_cast<int>(p.difficulty.size()) != m.n_tasks())
        throw ValidationError("difficulty size does not match matrix");
    if (probes.n_tasks() != m.n_tasks())
        throw ValidationError("probe set size does not match matrix");
}

// Log masses of the correct and a wrong answer under one worker family,
// from a single exponential. Equal to the log_*_answer_prob functions up
// to rounding; the fitting loops live on these.
struct LogPair {
    double correct;
    double wrong;
};

inline LogPair log_pair(int intention, double delta, double km1, double log_k) {
    if (intention) {
        if (delta >= 0.0) {
            double t = std::exp(-delta);  // in (0, 1]
            return {std::log1p(km1 / (1.0 + t)) - log_k, -delta - std::log1p(t) - log_k};
        }
        double u = std::exp(delta);
        return {std::log1p(km1 * u / (1.0 + u)) - log_k, -std::log1p(u) - log_k};
    }
    // Deliberate wrong-doer: correct mass is the honest wrong mass, wrong
    // mass adds the redirected sigma/(k-1) share.
    double k = km1 + 1.0;
    if (delta >= 0.0) {
        double t = std::exp(-delta);
        return {-delta - std::log1p(t) - log_k, std::log(t / k + 1.0 / km1) - std::log1p(t)};
    }
    double u = std::exp(delta);
    return {-std::log1p(u) - log_k, std::log(1.0 / k + u / km1) - std::log1p(u)};
}

inline double entry_delta(const GemParams& p, const AnswerEntry& e) {
    return p.slope[static_cast<size_t>(e.worker)] *
           (p.skill[static_cast<size_t>(e.worker)] - p.difficulty[static_cast<size_t>(e.task)]);
}

// Probability, under the current posteriors, that each recorded answer is
// correct. Probe entries use the known label. Fixed while posteriors are,
// so the M-substeps share one copy per outer iteration.
std::vector<double> correct_weights(const AnswerMatrix& m, const ProbeSet& probes,
                                    const PosteriorMatrix& post) {
    std::vector<double> q(static_cast<size_t>(m.n_entries()));
    const auto& entries = m.entries();
    for (size_t idx = 0; idx < entries.size(); ++idx) {
        const AnswerEntry& e = entries[idx];
        q[idx] = probes.is_probe(e.task) ? (e.answer == probes.label(e.task) ? 1.0 : 0.0)
                                         : post.at(e.task, e.answer);
    }
    return q;
}

// Expected complete-data objective and gradient for fixed posterior
// weights q.
class MStepEvaluator {
public:
    MStepEvaluator(const AnswerMatrix& m, std::vector<double> q)
        : m_(m), q_(std::move(q)), km1_(m.k() - 1.0),
          log_k_(std::log(static_cast<double>(m.k()))) {}

    const std::vector<double>& weights() const { return q_; }

    double objective(const GemParams& p) const {
        double obj = 0.0;
        const auto& entries = m_.entries();
        for (size_t idx = 0; idx < entries.size(); ++idx) {
            LogPair lp = log_pair(p.intention[static_cast<size_t>(entries[idx].worker)],
                                  entry_delta(p, entries[idx]), km1_, log_k_);
            obj += q_[idx] * lp.correct + (1.0 - q_[idx]) * lp.wrong;
        }
        return obj;
    }

    GemGradient gradient(const GemParams& p, bool tie_slopes) const {
        GemGradient g;
        g.skill.assign(p.skill.size(), 0.0);
        g.slope.assign(p.slope.size(), 0.0);
        g.difficulty.assign(p.difficulty.size(), 0.0);
        const auto& entries = m_.entries();
        const double k = km1_ + 1.0;
        for (size_t idx = 0; idx < entries.size(); ++idx) {
            const AnswerEntry& e = entries[idx];
            double a = p.slope[static_cast<size_t>(e.worker)];
            double diff = p.skill[static_cast<size_t>(e.worker)] -
                          p.difficulty[static_cast<size_t>(e.task)];
            double delta = a * diff;
            double sig, one_minus;
            if (delta >= 0.0) {
                double t = std::exp(-delta);
                sig = 1.0 / (1.0 + t);
                one_minus = t / (1.0 + t);
            } else {
                double u = std::exp(delta);
                sig = u / (1.0 + u);
                one_minus = 1.0 / (1.0 + u);
            }
            // d/d(delta) of the log correct/wrong masses.
            double gc, gw;
            if (p.intention[static_cast<size_t>(e.worker)]) {
                gc = km1_ * sig * one_minus / (1.0 + km1_ * sig);
                gw = -sig;
            } else {
                gc = -sig;
                double pw = one_minus / k + sig / km1_;
                gw = sig * one_minus / (k * km1_ * pw);
            }
            double factor = q_[idx] * gc + (1.0 - q_[idx]) * gw;
            g.skill[static_cast<size_t>(e.worker)] += factor * a;
            g.slope[static_cast<size_t>(e.worker)] += factor * diff;
            g.difficulty[static_cast<size_t>(e.task)] -= factor * a;
        }
        if (tie_slopes) {
            double total = 0.0;
            for (double x : g.slope) total += x;
            std::fill(g.slope.begin(), g.slope.end(), total);
        }
        return g;
    }

private:
    const AnswerMatrix& m_;
    std::vector<double> q_;
    double km1_;
    double log_k_;
};

GemParams m1_refit(const AnswerMatrix& m, const MStepEvaluator& eval, GemParams params) {
    const double km1 = m.k() - 1.0;
    const double log_k = std::log(static_cast<double>(m.k()));
    std::vector<double> honest_fit(static_cast<size_t>(m.n_workers()), 0.0);
    std::vector<double> adverse_fit(static_cast<size_t>(m.n_workers()), 0.0);
    const auto& entries = m.entries();
    const std::vector<double>& q = eval.weights();
    for (size_t idx = 0; idx < entries.size(); ++idx) {
        double delta = entry_delta(params, entries[idx]);
        LogPair h = log_pair(1, delta, km1, log_k);
        LogPair a = log_pair(0, delta, km1, log_k);
        size_t j = static_cast<size_t>(entries[idx].worker);
        honest_fit[j] += q[idx] * h.correct + (1.0 - q[idx]) * h.wrong;
        adverse_fit[j] += q[idx] * a.correct + (1.0 - q[idx]) * a.wrong;
    }
    for (size_t j = 0; j < honest_fit.size(); ++j)
        params.intention[j] = honest_fit[j] >= adverse_fit[j] ? 1 : 0;
    return params;
}

void clip_params(GemParams& p) {
    for (double& x : p.skill) x = clip(x, kSkillClip);
    for (double& x : p.slope) x = clip(x, kSlopeClip);
    for (double& x : p.difficulty) x = clip(x, kDiffClip);
}

M2Outcome m2_ascend(const MStepEvaluator& eval, GemParams params, const GemConfig& cfg) {
    M2Outcome out;
    double obj = eval.objective(params);
    double step = 1.0;
    for (int s = 0; s < cfg.max_ascent_steps; ++s) {
        GemGradient grad = eval.gradient(params, cfg.tie_slopes);
        double grad_sup = 0.0, grad_sq = 0.0;
        auto feed = [&](const std::vector<double>& v) {
            for (double x : v) {
                grad_sup = std::max(grad_sup, std::abs(x));
                grad_sq += x * x;
            }
        };
        feed(grad.skill);
        feed(grad.slope);
        feed(grad.difficulty);
        if (cfg.tie_slopes && !grad.slope.empty()) {
            // The shared slope direction was counted once per worker.
            grad_sq -=
                (static_cast<double>(grad.slope.size()) - 1.0) * grad.slope[0] * grad.slope[0];
        }
        if (grad_sup < cfg.grad_tol) break;

        bool accepted = false;
        while (step >= kMinStep) {
            GemParams cand = params;
            for (size_t j = 0; j < cand.skill.size(); ++j) cand.skill[j] += step * grad.skill[j];
            for (size_t j = 0; j < cand.slope.size(); ++j) cand.slope[j] += step * grad.slope[j];
            for (size_t i = 0; i < cand.difficulty.size(); ++i)
                cand.difficulty[i] += step * grad.difficulty[i];
            clip_params(cand);
            double cand_obj = eval.objective(cand);
            if (cand_obj >= obj + kArmijo * step * grad_sq) {
                double moved = 0.0;
                for (size_t j = 0; j < cand.skill.size(); ++j)
                    moved = std::max(moved, std::abs(cand.skill[j] - params.skill[j]));
                for (size_t j = 0; j < cand.slope.size(); ++j)
                    moved = std::max(moved, std::abs(cand.slope[j] - params.slope[j]));
                for (size_t i = 0; i < cand.difficulty.size(); ++i)
                    moved = std::max(moved, std::abs(cand.difficulty[i] - params.difficulty[i]));
                out.max_param_change = std::max(out.max_param_change, moved);
                params = std::move(cand);
                obj = cand_obj;
                step = std::min(step * 2.0, kMaxStep);
                accepted = true;
                ++out.steps_taken;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) {
            if (out.steps_taken == 0) out.stalled = true;
            break;
        }
    }
    out.params = std::move(params);
    out.objective = obj;
    return out;
}

}  // namespace

double incomplete_log_likelihood(const AnswerMatrix& m, const ProbeSet& probes,
                                 const GemParams& params) {
    validate(m, probes, params);
    const int k = m.k();
    const double km1 = k - 1.0;
    const double log_k = std::log(static_cast<double>(k));
    double ll = 0.0;
    std::vector<double> s(static_cast<size_t>(k) + 1);
    for (int i = 0; i < m.n_tasks(); ++i) {
        auto entries = m.task_entries(i);
        if (probes.is_probe(i)) {
            int z = probes.label(i);
            for (const AnswerEntry& e : entries) {
                LogPair lp = log_pair(params.intention[static_cast<size_t>(e.worker)],
                                      entry_delta(params, e), km1, log_k);
                ll += e.answer == z ? lp.correct : lp.wrong;
            }
            continue;
        }
        // s[c] = sum_j log beta(r_ij | c); assembled as the all-wrong base
        // plus a correction on each answered label.
        double base = 0.0;
        std::fill(s.begin(), s.end(), 0.0);
        for (const AnswerEntry& e : entries) {
            LogPair lp = log_pair(params.intention[static_cast<size_t>(e.worker)],
                                  entry_delta(params, e), km1, log_k);
            base += lp.wrong;
            s[static_cast<size_t>(e.answer)] += lp.correct - lp.wrong;
        }
        double mx = -std::numeric_limits<double>::infinity();
        for (int c = 1; c <= k; ++c) mx = std::max(mx, base + s[static_cast<size_t>(c)]);
        double acc = 0.0;
        for (int c = 1; c <= k; ++c) acc += std::exp(base + s[static_cast<size_t>(c)] - mx);
        ll += -log_k + mx + std::log(acc);
    }
    return ll;
}

PosteriorMatrix e_step(const AnswerMatrix& m, const ProbeSet& probes, const GemParams& params) {
    validate(m, probes, params);
    const int k = m.k();
    const double km1 = k - 1.0;
    const double log_k = std::log(static_cast<double>(k));
    PosteriorMatrix post;
    post.k = k;
    post.data.assign(static_cast<size_t>(m.n_tasks()) * static_cast<size_t>(k), 0.0);
    std::vector<double> s(static_cast<size_t>(k) + 1);
    for (int i = 0; i < m.n_tasks(); ++i) {
        double* row = post.data.data() + static_cast<size_t>(i) * static_cast<size_t>(k);
        if (probes.is_probe(i)) {
            row[probes.label(i) - 1] = 1.0;
            continue;
        }
        std::fill(s.begin(), s.end(), 0.0);
        double base = 0.0;
        for (const AnswerEntry& e : m.task_entries(i)) {
            LogPair lp = log_pair(params.intention[static_cast<size_t>(e.worker)],
                                  entry_delta(params, e), km1, log_k);
            base += lp.wrong;
            s[static_cast<size_t>(e.answer)] += lp.correct - lp.wrong;
        }
        double mx = -std::numeric_limits<double>::infinity();
        for (int c = 1; c <= k; ++c) mx = std::max(mx, base + s[static_cast<size_t>(c)]);
        if (!std::isfinite(mx))
            throw InternalError("posterior underflow: no label has positive likelihood for task " +
                                m.task_name(i));
        double acc = 0.0;
        for (int c = 1; c <= k; ++c) {
            row[c - 1] = std::exp(base + s[static_cast<size_t>(c)] - mx);
            acc += row[c - 1];
        }
        for (int c = 1; c <= k; ++c) row[c - 1] /= acc;
    }
    return post;
}

double expected_complete_objective(const AnswerMatrix& m, const ProbeSet& probes,
                                   const PosteriorMatrix& post, const GemParams& params) {
    validate(m, probes, params);
    return MStepEvaluator(m, correct_weights(m, probes, post)).objective(params);
}

GemGradient expected_complete_gradient(const AnswerMatrix& m, const ProbeSet& probes,
                                       const PosteriorMatrix& post, const GemParams& params,
                                       bool tie_slopes) {
    validate(m, probes, params);
    return MStepEvaluator(m, correct_weights(m, probes, post)).gradient(params, tie_slopes);
}

GemParams m1_step(const AnswerMatrix& m, const ProbeSet& probes, const PosteriorMatrix& post,
                  GemParams params) {
    validate(m, probes, params);
    return m1_refit(m, MStepEvaluator(m, correct_weights(m, probes, post)), std::move(params));
}

M2Outcome m2_step(const AnswerMatrix& m, const ProbeSet& probes, const PosteriorMatrix& post,
                  GemParams params, const GemConfig& cfg) {
    validate(m, probes, params);
    return m2_ascend(MStepEvaluator(m, correct_weights(m, probes, post)), std::move(params), cfg);
}

namespace {

GemParams initial_params(const AnswerMatrix& m, const GemConfig& cfg, int restart) {
    const int k = m.k();
    GemParams p;
    p.intention.assign(static_cast<size_t>(m.n_workers()), 1);
    p.skill.assign(static_cast<size_t>(m.n_workers()), 0.0);
    p.slope.assign(static_cast<size_t>(m.n_workers()), 1.0);
    p.difficulty.assign(static_cast<size_t>(m.n_tasks()), 0.0);

    // Plurality consensus (lowest label on ties) as a skill anchor: invert
    // the honest correct-answer curve at each worker's agreement rate, so
    // chance-level agreement lands near the spammer regime.
    std::vector<int> consensus(static_cast<size_t>(m.n_tasks()));
    std::vector<int> votes(static_cast<size_t>(k) + 1);
    for (int i = 0; i < m.n_tasks(); ++i) {
        std::fill(votes.begin(), votes.end(), 0);
        for (const AnswerEntry& e : m.task_entries(i)) ++votes[static_cast<size_t>(e.answer)];
        int best = 1;
        for (int c = 2; c <= k; ++c)
            if (votes[static_cast<size_t>(c)] > votes[static_cast<size_t>(best)]) best = c;
        consensus[static_cast<size_t>(i)] = best;
    }
    for (int j = 0; j < m.n_workers(); ++j) {
        auto ids = m.worker_entry_ids(j);
        int agree = 0;
        for (int idx : ids)
            if (m.entries()[static_cast<size_t>(idx)].answer ==
                consensus[static_cast<size_t>(m.entries()[static_cast<size_t>(idx)].task)])
                ++agree;
        double rate =
            ids.empty() ? 1.0 / k : static_cast<double>(agree) / static_cast<double>(ids.size());
        // Above-chance agreement inverts the honest correct-answer curve;
        // below-chance agreement is solve-and-lie evidence, so it inverts
        // the adversary curve instead (high skill, intention flips later).
        double solved = rate >= 1.0 / k ? (rate - 1.0 / k) / (1.0 - 1.0 / k) : 1.0 - k * rate;
        solved = std::clamp(solved, 1e-6, 1.0 - 1e-6);
        p.skill[static_cast<size_t>(j)] = clip(std::log(solved / (1.0 - solved)), kInitSkillClip);
    }

    if (restart > 0) {
        Rng jitter(mix64(cfg.seed, 0x9000 + static_cast<std::uint64_t>(restart)));
        for (double& x : p.skill) x = clip(x + jitter.next_normal(0.0, 1.0), kInitSkillClip);
        if (cfg.tie_slopes) {
            double shift = jitter.next_normal(0.0, 0.25);
            for (double& x : p.slope) x = clip(x + shift, kSlopeClip);
        } else {
            for (double& x : p.slope) x = clip(x + jitter.next_normal(0.0, 0.25), kSlopeClip);
        }
        for (double& x : p.difficulty) x = clip(x + jitter.next_normal(0.0, 1.0), kDiffClip);
    }
    return p;
}

struct FitOutcome {
    GemParams params;
    std::vector<double> ll_trace;
    bool converged = false;
    bool stalled = false;
    int outer_iterations = 0;
};

FitOutcome fit_once(const AnswerMatrix& m, const ProbeSet& probes, const GemConfig& cfg,
                    GemParams params) {
    FitOutcome fit;
    fit.ll_trace.push_back(incomplete_log_likelihood(m, probes, params));
    for (int outer = 0; outer < cfg.max_outer_iters; ++outer) {
        PosteriorMatrix post = e_step(m, probes, params);
        MStepEvaluator eval(m, correct_weights(m, probes, post));
        // Posteriors stay fixed while the intention and continuous blocks
        // alternate; both moves only ever raise the shared objective.
        for (int round = 0; round < cfg.max_inner_rounds; ++round) {
            bool intentions_moved = false;
            if (cfg.fit_adversaries) {
                std::vector<int> before = params.intention;
                params = m1_refit(m, eval, std::move(params));
                intentions_moved = params.intention != before;
            }
            M2Outcome m2 = m2_ascend(eval, std::move(params), cfg);
            params = std::move(m2.params);
            fit.stalled |= m2.stalled;
            if (!intentions_moved && m2.max_param_change < cfg.param_change_tol) break;
        }
        double ll = incomplete_log_likelihood(m, probes, params);
        double prev = fit.ll_trace.back();
        if (ll < prev - kTraceSlack)
            throw InternalError("data log-likelihood decreased during fitting");
        fit.ll_trace.push_back(ll);
        fit.outer_iterations = outer + 1;
        if (std::abs(ll - prev) < cfg.ll_rel_tol * std::max(1.0, std::abs(prev))) {
            fit.converged = true;
            break;
        }
    }
    fit.params = std::move(params);
    return fit;
}

}  // namespace

GemResult run_gem(const AnswerMatrix& m, const ProbeSet& probes, const GemConfig& cfg) {
    if (cfg.n_restarts < 1) throw ConfigError("n_restarts must be at least 1");
    if (cfg.max_outer_iters < 1) throw ConfigError("max_outer_iters must be at least 1");

    FitOutcome best;
    bool have_best = false;
    for (int r = 0; r < cfg.n_restarts; ++r) {
        FitOutcome fit = fit_once(m, probes, cfg, initial_params(m, cfg, r));
        if (!have_best || fit.ll_trace.back() > best.ll_trace.back()) {
            best = std::move(fit);
            have_best = true;
        }
    }

    GemResult res;
    res.params = std::move(best.params);
    res.ll_trace = std::move(best.ll_trace);
    res.converged = best.converged;
    res.stalled = best.stalled;
    res.outer_iterations = best.outer_iterations;
    res.posteriors = e_step(m, probes, res.params);
    res.decisions.label.assign(static_cast<size_t>(m.n_tasks()), 0);
    for (int i = 0; i < m.n_tasks(); ++i) {
        if (probes.is_probe(i)) {
            res.decisions.label[static_cast<size_t>(i)] = probes.label(i);
            continue;
        }
        int best_label = 1;
        for (int c = 2; c <= m.k(); ++c)
            if (res.posteriors.at(i, c) > res.posteriors.at(i, best_label)) best_label = c;
        res.decisions.label[static_cast<size_t>(i)] = best_label;
    }
    return res;
}

void save_gem_params(const GemResult& result, const AnswerMatrix& m,
                     const std::string& worker_path, const std::string& task_path) {
    ModelParams params;
    params.workers.resize(static_cast<size_t>(m.n_workers()));
    for (int j = 0; j < m.n_workers(); ++j) {
        WorkerParams& w = params.workers[static_cast<size_t>(j)];
        w.honest = result.params.intention[static_cast<size_t>(j)] == 1;
        w.skill = result.params.skill[static_cast<size_t>(j)];
        w.slope = result.params.slope[static_cast<size_t>(j)];
    }
    save_worker_params(params, m, worker_path);
    save_task_params(result.params.difficulty, result.decisions.label, m, task_path);
}

void save_ll_trace(const GemResult& result, const std::string& path) {
    std::vector<std::vector<std::string>> rows;
    rows.reserve(result.ll_trace.size());
    for (size_t i = 0; i < result.ll_trace.size(); ++i)
        rows.push_back({std::to_string(i), format_double(result.ll_trace[i])});
    write_csv(path, {"iter", "loglik"}, rows);
}

}  // namespace crowdagg

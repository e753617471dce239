#pragma once

#include <cstdint>
#include <vector>

#include "crowdagg/data.hpp"
#include "crowdagg/worker_model.hpp"

namespace crowdagg {

// Model state fitted by the alternating ascent: per-worker intention,
// skill and slope, plus per-task difficulty. Only the honest and the
// deliberate wrong-doer answer families are fitted.
struct GemParams {
    std::vector<int> intention;      // 1 honest / 0 adversarial
    std::vector<double> skill;
    std::vector<double> slope;
    std::vector<double> difficulty;  // per task
};

// Per-task categorical posteriors over the k labels, row-major.
// Probe rows are one-hot at the known label.
struct PosteriorMatrix {
    int k = 0;
    std::vector<double> data;  // n_tasks * k

    double at(int task, int label) const {  // label in 1..k
        return data[static_cast<size_t>(task) * static_cast<size_t>(k) +
                    static_cast<size_t>(label - 1)];
    }
};

struct GemConfig {
    bool fit_adversaries = true;
    bool tie_slopes = false;  // share one slope across all workers
    int n_restarts = 1;
    int max_outer_iters = 50;
    double ll_rel_tol = 1e-6;        // relative change of the data log-likelihood
    int max_inner_rounds = 3;        // intention/continuous alternation cap
    int max_ascent_steps = 6;        // gradient steps per continuous update
    double grad_tol = 1e-6;          // sup-norm stopping threshold
    double param_change_tol = 1e-6;  // inner-round convergence threshold
    std::uint64_t seed = kDefaultSeed;
};

struct GemResult {
    InferredAnswers decisions;
    GemParams params;
    PosteriorMatrix posteriors;
    std::vector<double> ll_trace;  // nondecreasing; first entry is the initial state
    int outer_iterations = 0;
    bool converged = false;
    bool stalled = false;  // some continuous update could not ascend at all
};

// Marginal log-likelihood of the observed answers: probe tasks contribute
// their worker terms directly, each unlabeled task contributes the log of
// the uniform mixture over labels of the product across its workers.
double incomplete_log_likelihood(const AnswerMatrix& m, const ProbeSet& probes,
                                 const GemParams& params);

// Posterior over each unlabeled task's truth given the current parameters,
// computed in the log domain with max subtraction.
PosteriorMatrix e_step(const AnswerMatrix& m, const ProbeSet& probes, const GemParams& params);

// The objective both M-substeps improve: the posterior-weighted expected
// complete-data log-likelihood (constant prior terms dropped).
double expected_complete_objective(const AnswerMatrix& m, const ProbeSet& probes,
                                   const PosteriorMatrix& post, const GemParams& params);

struct GemGradient {
    std::vector<double> skill;
    std::vector<double> slope;
    std::vector<double> difficulty;
};

// Analytic gradient of expected_complete_objective in the continuous
// parameters. With tie_slopes every slope component carries the summed
// slope derivative.
GemGradient expected_complete_gradient(const AnswerMatrix& m, const ProbeSet& probes,
                                       const PosteriorMatrix& post, const GemParams& params,
                                       bool tie_slopes);

// Closed-form per-worker intention refit; ties keep the worker honest.
GemParams m1_step(const AnswerMatrix& m, const ProbeSet& probes, const PosteriorMatrix& post,
                  GemParams params);

struct M2Outcome {
    GemParams params;
    bool stalled = false;          // step size underflowed before any ascent
    double max_param_change = 0.0;
    double objective = 0.0;        // value at the returned parameters
    int steps_taken = 0;
};

// Backtracking gradient ascent on the expected complete-data objective;
// never returns parameters with a lower objective than the input.
M2Outcome m2_step(const AnswerMatrix& m, const ProbeSet& probes, const PosteriorMatrix& post,
                  GemParams params, const GemConfig& cfg);

// Full fit: outer E + inner M1/M2 alternation until the data log-likelihood
// stabilizes, over n_restarts jittered starts, keeping the best final
// likelihood. Decisions are per-task posterior argmaxes (lowest label wins
// ties); probe tasks carry their known labels.
GemResult run_gem(const AnswerMatrix& m, const ProbeSet& probes, const GemConfig& cfg);

// Result exports.
void save_gem_params(const GemResult& result, const AnswerMatrix& m,
                     const std::string& worker_path, const std::string& task_path);
void save_ll_trace(const GemResult& result, const std::string& path);

}  // namespace crowdagg

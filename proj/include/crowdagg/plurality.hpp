#pragma once

#include <cstdint>
#include <vector>

#include "crowdagg/data.hpp"
#include "crowdagg/worker_model.hpp"

namespace crowdagg {

// Objectives maximized by the iterative schemes. All are linear in the
// worker weights, which live on the unit sphere (the energy constraint),
// so decisions are invariant to any positive rescaling of the weights.
enum class ObjectiveKind {
    kAgreement,       // sum_j w_j * (#tasks where j agrees with the decision)
    kIntentionAware,  // agreement for honest workers, scaled disagreement for flagged ones
    kSigned,          // agreement minus (1/(k-1))-scaled disagreement, weights may be negative
};

struct PluralityResult {
    InferredAnswers decisions;
    std::vector<double> weights;          // empty for plain plurality
    std::vector<int> intentions;          // per worker, 1 honest / 0 flagged; may be empty
    std::vector<double> objective_trace;  // one value per iteration, nondecreasing
    int iterations = 0;
    bool converged = true;
    bool degenerate_weights = false;  // all-zero scores forced the uniform fallback
};

// Unweighted plurality vote; ties are broken by a seeded uniform choice
// among the tied labels.
PluralityResult plu(const AnswerMatrix& m, std::uint64_t seed);

// Plurality weighted by probe accuracy: a worker's weight is the fraction
// of the probes they answered that they got right (1/k if they answered
// none). Probe tasks are clamped to their known labels.
PluralityResult ss_plu(const AnswerMatrix& m, const ProbeSet& probes, std::uint64_t seed);

// Iterated decide/reweight ascent on the agreement objective; weights stay
// nonnegative and no intentions are modeled.
PluralityResult us_wp(const AnswerMatrix& m, const ProbeSet& probes, std::uint64_t seed);

// Adds a binary per-worker intention: flagged workers support every label
// except the one they chose, at strength w_j/(k-1).
PluralityResult us_sw(const AnswerMatrix& m, const ProbeSet& probes, std::uint64_t seed);

// Signed weights: consistently disagreeing workers drift negative and their
// votes count against the labels they pick.
PluralityResult us_neg(const AnswerMatrix& m, const ProbeSet& probes, std::uint64_t seed);

// Signed-weight pass first, then the intention scheme seeded from its
// solution: intentions from the weight signs, magnitudes as start weights.
PluralityResult us_hyb(const AnswerMatrix& m, const ProbeSet& probes, std::uint64_t seed);

// Evaluates an objective at a given state. `intentions` is required for
// kIntentionAware and ignored otherwise.
double objective(ObjectiveKind kind, const AnswerMatrix& m, const InferredAnswers& decisions,
                 const std::vector<double>& weights,
                 const std::vector<int>* intentions = nullptr);

}  // namespace crowdagg

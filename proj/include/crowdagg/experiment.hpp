#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "crowdagg/data.hpp"
#include "crowdagg/gem.hpp"
#include "crowdagg/worker_model.hpp"

namespace crowdagg {

// The aggregation schemes the harness can run. SS-* variants clamp probe
// tasks to their known labels (or weight by probe accuracy); US-* variants
// ignore supervision even when the dataset carries probes.
enum class Method {
    kPlu,
    kSsPlu,
    kUsSw,
    kSsSw,
    kUsNeg,
    kSsNeg,
    kUsGem,
    kSsGem,
    kUsHyb,
};

// Display name as used in result tables, e.g. "US-NEG".
std::string method_name(Method method);
// Accepts either the display name or its lowercase form; ConfigError on
// anything else.
Method parse_method(const std::string& name);
bool method_uses_probes(Method method);

enum class SweepKind {
    kDiffVar,    // difficulty variance sweep over a Gaussian crowd
    kDegree,     // assignment-degree sweep over a Gaussian crowd
    kShaGrid,    // spammer/hammer/adversary fraction grid
    kGroupGrid,  // high-skill-adversary x low-skill-honest fraction grid
};

struct ExperimentSpec {
    SweepKind kind = SweepKind::kDiffVar;
    std::vector<Method> methods;
    int n_trials = 20;
    std::uint64_t seed = kDefaultSeed;
    int jobs = 1;
    // Wall-clock timing is off by default so identical runs emit identical
    // bytes; flipping it on makes the runtime column genuinely measured.
    bool measure_runtime = false;

    CrowdGenConfig gaussian;   // base crowd for kDiffVar / kDegree
    // Per-task worker assignment for kDiffVar; 0 keeps the full matrix.
    int assign_degree = 40;
    Uniform3Config uniform3;   // base crowd for kGroupGrid
    int sha_workers = 50;      // crowd shape for kShaGrid
    int sha_tasks = 100;
    int sha_k = 5;
    int sha_probe_count = 10;
    // Workers per task for kShaGrid; 0 keeps the full matrix. Small degrees
    // are what make plurality fallible on this crowd.
    int sha_degree = 5;

    std::vector<double> diff_vars;       // kDiffVar points
    std::vector<int> degrees;            // kDegree points
    std::vector<double> adv_fractions;   // rows of either grid
    std::vector<double> spam_fractions;  // kShaGrid columns
    std::vector<double> low_fractions;   // kGroupGrid columns

    GemConfig gem;  // fitting controls shared by the GEM methods
};

struct TrialReport {
    int errors = 0;
    double runtime_ms = 0.0;
    // Pearson correlations between generated and fitted parameters; NaN
    // when the method fits none or the generator has no such parameters.
    double skill_corr = 0.0;
    double diff_corr = 0.0;
};

struct CellResult {
    std::string sweep_value;  // row label, e.g. "4000" or "adv20_spam60"
    Method method;
    bool skipped = false;  // probe-requiring method on a probe-free spec
    std::vector<TrialReport> trials;
    double mean_errors = 0.0;
    double std_errors = 0.0;  // population standard deviation
    double mean_runtime_ms = 0.0;
    double mean_skill_corr = 0.0;
    double mean_diff_corr = 0.0;
};

struct ExperimentResult {
    std::vector<std::string> sweep_values;
    std::vector<Method> methods;
    std::vector<CellResult> cells;  // sweep-major, then method order
    // Per-worker accuracies from the first trial of the first sweep point,
    // the source of the accuracy histogram.
    std::vector<double> first_trial_accuracies;

    const CellResult& cell(int point, int method) const {
        return cells[static_cast<size_t>(point) * methods.size() + static_cast<size_t>(method)];
    }
};

// Count of non-probe tasks whose decision differs from the truth.
int score(const InferredAnswers& decisions, const std::vector<int>& truth,
          const ProbeSet& probes);

// NaN when either input has zero variance.
double pearson_correlation(const std::vector<double>& x, const std::vector<double>& y);

struct RecoveryStats {
    double skill_corr = 0.0;
    double diff_corr = 0.0;
};

ModelParams to_model_params(const GemParams& params);

// Pearson correlations between true and estimated worker skills and task
// difficulties; NaN components where the correlation is undefined.
RecoveryStats recovery_stats(const ModelParams& true_params, const ModelParams& est_params);

// Runs every (sweep point, trial, method) cell. Each trial draws a fresh
// crowd from a seed mixed out of (spec.seed, point index, trial index), so
// any cell can be reproduced in isolation; trials may run on spec.jobs
// threads, reduced in trial order.
ExperimentResult run_experiment(const ExperimentSpec& spec);

// results.csv: sweep_value,method,mean_errors,std_errors,mean_runtime_ms.
// Skipped cells carry nan statistics.
void save_results_csv(const ExperimentResult& result, const std::string& path);
// Markdown table, one row per sweep point, one column per method.
void save_results_md(const ExperimentResult& result, const std::string& path);
// Ten-bin histogram of first_trial_accuracies: bin_lo,bin_hi,count.
void save_accuracy_histogram(const ExperimentResult& result, const std::string& path);
// recovery.csv: per-cell mean parameter-recovery correlations for the
// methods that fit them.
void save_recovery_csv(const ExperimentResult& result, const std::string& path);

}  // namespace crowdagg

#pragma once

#include <cstdint>
#include <vector>

#include "crowdagg/data.hpp"
#include "crowdagg/rng.hpp"

namespace crowdagg {

// Default seed used by every stochastic component when none is given.
inline constexpr std::uint64_t kDefaultSeed = 12345;

double sigmoid(double x);   // overflow-safe for any finite x
double softplus(double x);  // log(1 + e^x), overflow-safe

// Answer distributions. A worker facing a task sees the margin
// delta = slope * (skill - difficulty); sigma(delta) is the probability the
// worker actually works the task out. All pmfs are symmetric across the k-1
// wrong labels, so each is fully described by its `correct` / `wrong` masses.

// Honest: answers the truth when solved, guesses uniformly otherwise.
double honest_answer_prob(double delta, int k, bool correct);

// Deliberate wrong-doer: picks a uniformly random wrong label when solved,
// guesses uniformly otherwise. A very negative margin turns either kind of
// worker into a pure spammer (uniform over all k labels).
double simple_adversary_answer_prob(double delta, int k, bool correct);

// Cautious wrong-doer: answers honestly on tasks below a personal easiness
// threshold to build credibility, lies on tasks between the threshold and
// their skill, guesses beyond it. easy_margin = threshold_slope *
// (threshold - difficulty); callers keep threshold < skill.
double complex_adversary_answer_prob(double delta, double easy_margin, int k, bool correct);

// Log-domain forms used by the fitting code; these stay finite for any
// finite margin even where the plain probability underflows to zero.
double log_honest_answer_prob(double delta, int k, bool correct);
double log_simple_adversary_answer_prob(double delta, int k, bool correct);

struct WorkerParams {
    bool honest = true;
    double skill = 0.0;
    double slope = 1.0;
    // Complex adversaries only:
    bool complex_adversary = false;
    double threshold = 0.0;
    double threshold_slope = 1.0;
};

struct ModelParams {
    std::vector<WorkerParams> workers;
    std::vector<double> difficulty;  // per task
};

// Probability that the worker answers r on a task with truth z.
double answer_prob(const WorkerParams& w, double difficulty, int k, int z, int r);

// One answer drawn from the worker's pmf.
int draw_answer(Rng& rng, const WorkerParams& w, double difficulty, int k, int z);

enum class AdversaryKind { kSimple, kComplex };

// Gaussian crowd: skills, slopes and difficulties are normal draws (the
// *_var fields are variances), truths are uniform, the answer matrix is
// complete, and probe_count random tasks are designated probes.
struct CrowdGenConfig {
    int n_workers = 100;
    int n_tasks = 100;
    int k = 5;
    double skill_mean = 1.0;
    double skill_var = 400.0;
    double slope_mean = 0.3;
    double slope_var = 0.04;  // sd 0.2; larger spreads flood the crowd with anti-calibrated workers
    double diff_mean = 8.0;
    double diff_var = 500.0;
    double adv_fraction = 0.1;  // floor(adv_fraction * n_workers) adversaries
    AdversaryKind adv_kind = AdversaryKind::kSimple;
    double adv_theta_gap = 2.0;  // complex: threshold = skill - gap
    int probe_count = 10;
    std::uint64_t seed = kDefaultSeed;
};

struct Dataset {
    AnswerMatrix answers;
    ProbeSet probes;
    ModelParams params;
    std::vector<int> truth;  // per task, 1..k
};

Dataset generate_dataset(const CrowdGenConfig& cfg);

// Three-archetype crowd: spammers answer uniformly, hammers always answer
// the truth, adversaries answer uniformly among the wrong labels. Role
// counts are floor(fraction * n_workers); the remainder are hammers.
enum class ShaRole { kSpammer, kHammer, kAdversary };

struct ShaDataset {
    AnswerMatrix answers;
    std::vector<int> truth;
    std::vector<ShaRole> roles;  // per worker
};

ShaDataset generate_sha_dataset(int n_workers, int n_tasks, int k, double spammer_fraction,
                                double adversary_fraction, std::uint64_t seed);

// Uniform three-group crowd: high-skilled honest workers, low-skilled honest
// workers and high-skilled deliberate wrong-doers, with uniform skill and
// difficulty draws.
struct Uniform3Config {
    int n_workers = 100;
    int n_tasks = 100;
    int k = 5;
    double adv_fraction = 0.0;        // high-skilled wrong-doers
    double low_skill_fraction = 0.0;  // low-skilled honest workers
    double high_skill_lo = 0.0, high_skill_hi = 8.0;
    double low_skill_lo = 0.0, low_skill_hi = 2.0;
    double diff_lo = 0.0, diff_hi = 8.0;
    double slope_mean = 1.0;
    double slope_var = 0.0;
    int probe_count = 10;
    std::uint64_t seed = kDefaultSeed;
};

Dataset generate_uniform3_dataset(const Uniform3Config& cfg);

// Parameter exports. Worker rows are `worker_id,v,d,a` plus `theta,b`
// columns when any worker is a complex adversary; task rows are
// `task_id,dtilde,z`.
void save_worker_params(const ModelParams& params, const AnswerMatrix& m,
                        const std::string& path);
void save_task_params(const std::vector<double>& difficulty, const std::vector<int>& labels,
                      const AnswerMatrix& m, const std::string& path);

}  // namespace crowdagg

#include "crowdagg/worker_model.hpp"

#include <cmath>

#include "crowdagg/csv.hpp"
#include "crowdagg/error.hpp"

namespace crowdagg {

double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    double e = std::exp(x);
    return e / (1.0 + e);
}

double softplus(double x) {
    return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double honest_answer_prob(double delta, int k, bool correct) {
    double s = sigmoid(delta);
    double guess = (1.0 - s) / k;
    return correct ? s + guess : guess;
}

double simple_adversary_answer_prob(double delta, int k, bool correct) {
    double s = sigmoid(delta);
    double guess = (1.0 - s) / k;
    return correct ? guess : guess + s / (k - 1);
}

double complex_adversary_answer_prob(double delta, double easy_margin, int k, bool correct) {
    double sa = sigmoid(delta);
    double sb = sigmoid(easy_margin);
    double guess = (1.0 - sa) / k;
    return correct ? guess + sb * sa : guess + (1.0 - sb) * sa / (k - 1);
}

double log_honest_answer_prob(double delta, int k, bool correct) {
    // correct: (1 + (k-1) sigma) / k; wrong: (1 - sigma) / k. The wrong
    // branch is written via softplus so it stays finite for large margins.
    if (correct) return std::log1p((k - 1) * sigmoid(delta)) - std::log(static_cast<double>(k));
    return -softplus(delta) - std::log(static_cast<double>(k));
}

double log_simple_adversary_answer_prob(double delta, int k, bool correct) {
    if (correct) return -softplus(delta) - std::log(static_cast<double>(k));
    double s = sigmoid(delta);
    return std::log((1.0 - s) / k + s / (k - 1));
}

double answer_prob(const WorkerParams& w, double difficulty, int k, int z, int r) {
    double delta = w.slope * (w.skill - difficulty);
    bool correct = (r == z);
    if (w.honest) return honest_answer_prob(delta, k, correct);
    if (w.complex_adversary) {
        double easy_margin = w.threshold_slope * (w.threshold - difficulty);
        return complex_adversary_answer_prob(delta, easy_margin, k, correct);
    }
    return simple_adversary_answer_prob(delta, k, correct);
}

namespace {

// Uniform label excluding z; consumes one draw.
int draw_wrong_label(Rng& rng, int k, int z) {
    int r = 1 + rng.next_below(k - 1);
    return r >= z ? r + 1 : r;
}

}  // namespace

int draw_answer(Rng& rng, const WorkerParams& w, double difficulty, int k, int z) {
    double delta = w.slope * (w.skill - difficulty);
    bool solved = rng.next_unit() < sigmoid(delta);
    if (!solved) return 1 + rng.next_below(k);  // blind guess over all labels
    if (w.honest) return z;
    if (!w.complex_adversary) return draw_wrong_label(rng, k, z);
    double easy_margin = w.threshold_slope * (w.threshold - difficulty);
    bool too_easy_to_lie = rng.next_unit() < sigmoid(easy_margin);
    return too_easy_to_lie ? z : draw_wrong_label(rng, k, z);
}

namespace {

void validate_common(int n_workers, int n_tasks, int k, int probe_count) {
    if (n_workers < 1) throw ConfigError("n_workers must be positive");
    if (n_tasks < 1) throw ConfigError("n_tasks must be positive");
    if (k < 2) throw ConfigError("k must be at least 2");
    if (probe_count < 0 || probe_count > n_tasks)
        throw ConfigError("probe_count outside 0..n_tasks");
}

ProbeSet pick_probes(Rng& rng, int n_tasks, int k, int probe_count,
                     const std::vector<int>& truth) {
    std::vector<int> chosen = rng.sample_without_replacement(n_tasks, probe_count);
    std::vector<std::pair<int, int>> pairs;
    pairs.reserve(chosen.size());
    for (int t : chosen) pairs.emplace_back(t, truth[static_cast<size_t>(t)]);
    return ProbeSet::from_pairs(n_tasks, k, pairs);
}

Dataset assemble_dataset(Rng& rng, int k, int probe_count, ModelParams params,
                         std::vector<int> truth) {
    const int n_tasks = static_cast<int>(params.difficulty.size());
    const int n_workers = static_cast<int>(params.workers.size());
    std::vector<AnswerEntry> entries;
    entries.reserve(static_cast<size_t>(n_tasks) * static_cast<size_t>(n_workers));
    for (int i = 0; i < n_tasks; ++i)
        for (int j = 0; j < n_workers; ++j)
            entries.push_back({i, j,
                               draw_answer(rng, params.workers[static_cast<size_t>(j)],
                                           params.difficulty[static_cast<size_t>(i)], k,
                                           truth[static_cast<size_t>(i)])});
    Dataset data;
    data.answers = AnswerMatrix::build(k, n_tasks, n_workers, std::move(entries));
    data.probes = pick_probes(rng, n_tasks, k, probe_count, truth);
    data.params = std::move(params);
    data.truth = std::move(truth);
    return data;
}

}  // namespace

Dataset generate_dataset(const CrowdGenConfig& cfg) {
    validate_common(cfg.n_workers, cfg.n_tasks, cfg.k, cfg.probe_count);
    if (cfg.adv_fraction < 0.0 || cfg.adv_fraction > 1.0)
        throw ConfigError("adv_fraction outside [0, 1]");
    if (cfg.skill_var < 0.0 || cfg.slope_var < 0.0 || cfg.diff_var < 0.0)
        throw ConfigError("variances must be nonnegative");
    if (cfg.adv_kind == AdversaryKind::kComplex && cfg.adv_theta_gap <= 0.0)
        throw ConfigError("adv_theta_gap must be positive");

    Rng rng(cfg.seed);
    ModelParams params;
    params.workers.resize(static_cast<size_t>(cfg.n_workers));
    for (auto& w : params.workers) w.skill = rng.next_normal(cfg.skill_mean, std::sqrt(cfg.skill_var));
    for (auto& w : params.workers) w.slope = rng.next_normal(cfg.slope_mean, std::sqrt(cfg.slope_var));
    int n_adv = static_cast<int>(cfg.adv_fraction * cfg.n_workers);
    for (int j : rng.sample_without_replacement(cfg.n_workers, n_adv)) {
        WorkerParams& w = params.workers[static_cast<size_t>(j)];
        w.honest = false;
        if (cfg.adv_kind == AdversaryKind::kComplex) {
            w.complex_adversary = true;
            w.threshold = w.skill - cfg.adv_theta_gap;
            w.threshold_slope = w.slope;
        }
    }
    params.difficulty.resize(static_cast<size_t>(cfg.n_tasks));
    for (auto& d : params.difficulty) d = rng.next_normal(cfg.diff_mean, std::sqrt(cfg.diff_var));
    std::vector<int> truth(static_cast<size_t>(cfg.n_tasks));
    for (auto& z : truth) z = 1 + rng.next_below(cfg.k);
    return assemble_dataset(rng, cfg.k, cfg.probe_count, std::move(params), std::move(truth));
}

ShaDataset generate_sha_dataset(int n_workers, int n_tasks, int k, double spammer_fraction,
                                double adversary_fraction, std::uint64_t seed) {
    validate_common(n_workers, n_tasks, k, 0);
    if (spammer_fraction < 0.0 || adversary_fraction < 0.0 ||
        spammer_fraction + adversary_fraction > 1.0)
        throw ConfigError("role fractions must be nonnegative and sum to at most 1");

    Rng rng(seed);
    int n_spam = static_cast<int>(spammer_fraction * n_workers);
    int n_adv = static_cast<int>(adversary_fraction * n_workers);
    std::vector<int> order(static_cast<size_t>(n_workers));
    for (int j = 0; j < n_workers; ++j) order[static_cast<size_t>(j)] = j;
    rng.shuffle(order);
    std::vector<ShaRole> roles(static_cast<size_t>(n_workers), ShaRole::kHammer);
    for (int r = 0; r < n_spam; ++r) roles[static_cast<size_t>(order[static_cast<size_t>(r)])] = ShaRole::kSpammer;
    for (int r = n_spam; r < n_spam + n_adv; ++r)
        roles[static_cast<size_t>(order[static_cast<size_t>(r)])] = ShaRole::kAdversary;

    std::vector<int> truth(static_cast<size_t>(n_tasks));
    for (auto& z : truth) z = 1 + rng.next_below(k);

    std::vector<AnswerEntry> entries;
    entries.reserve(static_cast<size_t>(n_tasks) * static_cast<size_t>(n_workers));
    for (int i = 0; i < n_tasks; ++i) {
        int z = truth[static_cast<size_t>(i)];
        for (int j = 0; j < n_workers; ++j) {
            int answer;
            switch (roles[static_cast<size_t>(j)]) {
                case ShaRole::kSpammer: answer = 1 + rng.next_below(k); break;
                case ShaRole::kHammer: answer = z; break;
                default: answer = draw_wrong_label(rng, k, z); break;
            }
            entries.push_back({i, j, answer});
        }
    }
    ShaDataset data;
    data.answers = AnswerMatrix::build(k, n_tasks, n_workers, std::move(entries));
    data.truth = std::move(truth);
    data.roles = std::move(roles);
    return data;
}

Dataset generate_uniform3_dataset(const Uniform3Config& cfg) {
    validate_common(cfg.n_workers, cfg.n_tasks, cfg.k, cfg.probe_count);
    if (cfg.adv_fraction < 0.0 || cfg.low_skill_fraction < 0.0 ||
        cfg.adv_fraction + cfg.low_skill_fraction > 1.0)
        throw ConfigError("group fractions must be nonnegative and sum to at most 1");
    if (cfg.slope_var < 0.0) throw ConfigError("slope_var must be nonnegative");

    Rng rng(cfg.seed);
    int n_adv = static_cast<int>(cfg.adv_fraction * cfg.n_workers);
    int n_low = static_cast<int>(cfg.low_skill_fraction * cfg.n_workers);
    std::vector<int> order(static_cast<size_t>(cfg.n_workers));
    for (int j = 0; j < cfg.n_workers; ++j) order[static_cast<size_t>(j)] = j;
    rng.shuffle(order);

    ModelParams params;
    params.workers.resize(static_cast<size_t>(cfg.n_workers));
    for (int r = 0; r < cfg.n_workers; ++r) {
        WorkerParams& w = params.workers[static_cast<size_t>(order[static_cast<size_t>(r)])];
        if (r < n_adv) {
            w.honest = false;
            w.skill = rng.next_uniform(cfg.high_skill_lo, cfg.high_skill_hi);
        } else if (r < n_adv + n_low) {
            w.skill = rng.next_uniform(cfg.low_skill_lo, cfg.low_skill_hi);
        } else {
            w.skill = rng.next_uniform(cfg.high_skill_lo, cfg.high_skill_hi);
        }
    }
    for (auto& w : params.workers) w.slope = rng.next_normal(cfg.slope_mean, std::sqrt(cfg.slope_var));
    params.difficulty.resize(static_cast<size_t>(cfg.n_tasks));
    for (auto& d : params.difficulty) d = rng.next_uniform(cfg.diff_lo, cfg.diff_hi);
    std::vector<int> truth(static_cast<size_t>(cfg.n_tasks));
    for (auto& z : truth) z = 1 + rng.next_below(cfg.k);
    return assemble_dataset(rng, cfg.k, cfg.probe_count, std::move(params), std::move(truth));
}

void save_worker_params(const ModelParams& params, const AnswerMatrix& m,
                        const std::string& path) {
    if (static_cast<int>(params.workers.size()) != m.n_workers())
        throw InternalError("worker parameter count does not match matrix");
    bool any_complex = false;
    for (const auto& w : params.workers) any_complex |= w.complex_adversary;

    std::vector<std::string> header = {"worker_id", "v", "d", "a"};
    if (any_complex) {
        header.push_back("theta");
        header.push_back("b");
    }
    std::vector<std::vector<std::string>> rows;
    rows.reserve(params.workers.size());
    for (int j = 0; j < m.n_workers(); ++j) {
        const WorkerParams& w = params.workers[static_cast<size_t>(j)];
        std::vector<std::string> row = {m.worker_name(j), w.honest ? "1" : "0",
                                        format_double(w.skill), format_double(w.slope)};
        if (any_complex) {
            row.push_back(w.complex_adversary ? format_double(w.threshold) : "");
            row.push_back(w.complex_adversary ? format_double(w.threshold_slope) : "");
        }
        rows.push_back(std::move(row));
    }
    write_csv(path, header, rows);
}

void save_task_params(const std::vector<double>& difficulty, const std::vector<int>& labels,
                      const AnswerMatrix& m, const std::string& path) {
    if (static_cast<int>(difficulty.size()) != m.n_tasks() ||
        static_cast<int>(labels.size()) != m.n_tasks())
        throw InternalError("task parameter count does not match matrix");
    std::vector<std::vector<std::string>> rows;
    rows.reserve(difficulty.size());
    for (int i = 0; i < m.n_tasks(); ++i)
        rows.push_back({m.task_name(i), format_double(difficulty[static_cast<size_t>(i)]),
                        std::to_string(labels[static_cast<size_t>(i)])});
    write_csv(path, {"task_id", "dtilde", "z"}, rows);
}

}  // namespace crowdagg

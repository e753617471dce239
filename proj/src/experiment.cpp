#include "crowdagg/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <mutex>
#include <optional>
#include <thread>
#include <utility>

#include "crowdagg/csv.hpp"
#include "crowdagg/error.hpp"
#include "crowdagg/plurality.hpp"
#include "crowdagg/rng.hpp"

namespace crowdagg {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

const struct {
    Method method;
    const char* name;
} kMethodNames[] = {
    {Method::kPlu, "PLU"},       {Method::kSsPlu, "SS-PLU"}, {Method::kUsSw, "US-SW"},
    {Method::kSsSw, "SS-SW"},    {Method::kUsNeg, "US-NEG"}, {Method::kSsNeg, "SS-NEG"},
    {Method::kUsGem, "US-GEM"},  {Method::kSsGem, "SS-GEM"}, {Method::kUsHyb, "US-HYB"},
};

std::string fmt(double v) { return std::isnan(v) ? "nan" : format_double(v); }

}  // namespace

std::string method_name(Method method) {
    for (const auto& entry : kMethodNames)
        if (entry.method == method) return entry.name;
    throw InternalError("unnamed method");
}

Method parse_method(const std::string& name) {
    std::string upper = name;
    for (char& c : upper) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    for (const auto& entry : kMethodNames)
        if (upper == entry.name) return entry.method;
    throw ConfigError("unknown method '" + name +
                      "' (expected one of plu, ss-plu, us-sw, ss-sw, us-neg, ss-neg, us-gem, "
                      "ss-gem, us-hyb)");
}

bool method_uses_probes(Method method) {
    switch (method) {
        case Method::kSsPlu:
        case Method::kSsSw:
        case Method::kSsNeg:
        case Method::kSsGem:
            return true;
        default:
            return false;
    }
}

int score(const InferredAnswers& decisions, const std::vector<int>& truth,
          const ProbeSet& probes) {
    if (truth.size() != decisions.label.size())
        throw ValidationError("decision and truth vectors differ in length");
    if (probes.n_tasks() != static_cast<int>(truth.size()))
        throw ValidationError("probe set does not cover the scored tasks");
    int errors = 0;
    for (size_t i = 0; i < truth.size(); ++i) {
        if (decisions.label[i] < 1)
            throw ValidationError("missing decision for task index " + std::to_string(i));
        if (!probes.is_probe(static_cast<int>(i)) && decisions.label[i] != truth[i]) ++errors;
    }
    return errors;
}

double pearson_correlation(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw ValidationError("correlation inputs differ in length");
    const size_t n = x.size();
    if (n < 2) return kNan;
    double mx = 0.0, my = 0.0;
    for (size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx <= 0.0 || syy <= 0.0) return kNan;
    return sxy / std::sqrt(sxx * syy);
}

ModelParams to_model_params(const GemParams& params) {
    ModelParams out;
    out.workers.resize(params.skill.size());
    for (size_t j = 0; j < params.skill.size(); ++j) {
        out.workers[j].honest = params.intention[j] == 1;
        out.workers[j].skill = params.skill[j];
        out.workers[j].slope = params.slope[j];
    }
    out.difficulty = params.difficulty;
    return out;
}

RecoveryStats recovery_stats(const ModelParams& true_params, const ModelParams& est_params) {
    if (true_params.workers.size() != est_params.workers.size() ||
        true_params.difficulty.size() != est_params.difficulty.size())
        throw ValidationError("parameter sets differ in shape");
    std::vector<double> td, ed;
    td.reserve(true_params.workers.size());
    ed.reserve(est_params.workers.size());
    for (size_t j = 0; j < true_params.workers.size(); ++j) {
        td.push_back(true_params.workers[j].skill);
        ed.push_back(est_params.workers[j].skill);
    }
    RecoveryStats stats;
    stats.skill_corr = pearson_correlation(td, ed);
    stats.diff_corr = pearson_correlation(true_params.difficulty, est_params.difficulty);
    return stats;
}

namespace {

struct GeneratedTrial {
    AnswerMatrix answers;
    ProbeSet probes;
    std::vector<int> truth;
    std::optional<ModelParams> params;  // absent for archetype crowds
};

std::string percent_label(double fraction) {
    double pct = fraction * 100.0;
    double rounded = std::round(pct);
    if (std::abs(pct - rounded) < 1e-9) return format_double(rounded);
    return format_double(pct);
}

ProbeSet sample_probes(const std::vector<int>& truth, int count, std::uint64_t seed) {
    int n = static_cast<int>(truth.size());
    if (count <= 0) return ProbeSet::none(n);
    if (count > n) throw ConfigError("probe_count exceeds the task count");
    Rng rng(seed);
    std::vector<int> chosen = rng.sample_without_replacement(n, count);
    std::sort(chosen.begin(), chosen.end());
    int k = 0;
    for (int z : truth) k = std::max(k, z);
    std::vector<std::pair<int, int>> pairs;
    pairs.reserve(chosen.size());
    for (int task : chosen) pairs.emplace_back(task, truth[static_cast<size_t>(task)]);
    return ProbeSet::from_pairs(n, std::max(k, 2), pairs);
}

struct PointPlan {
    std::string label;
    // kDiffVar / kDegree
    double diff_var = 0.0;
    int degree = 0;
    // kShaGrid / kGroupGrid
    double adv_fraction = 0.0;
    double other_fraction = 0.0;  // spammers or low-skill share
};

std::vector<PointPlan> plan_points(const ExperimentSpec& spec) {
    std::vector<PointPlan> points;
    switch (spec.kind) {
        case SweepKind::kDiffVar:
            if (spec.diff_vars.empty()) throw ConfigError("diff_vars must be non-empty");
            for (double v : spec.diff_vars) {
                if (v < 0.0) throw ConfigError("difficulty variance must be nonnegative");
                points.push_back({format_double(v), v, 0, 0.0, 0.0});
            }
            break;
        case SweepKind::kDegree:
            if (spec.degrees.empty()) throw ConfigError("degrees must be non-empty");
            for (int d : spec.degrees) {
                if (d < 1 || d > spec.gaussian.n_workers)
                    throw ConfigError("assignment degree must be in [1, n_workers]");
                points.push_back({std::to_string(d), 0.0, d, 0.0, 0.0});
            }
            break;
        case SweepKind::kShaGrid:
            if (spec.adv_fractions.empty() || spec.spam_fractions.empty())
                throw ConfigError("adv_fractions and spam_fractions must be non-empty");
            for (double adv : spec.adv_fractions)
                for (double spam : spec.spam_fractions) {
                    if (adv < 0.0 || spam < 0.0 || adv + spam > 1.0)
                        throw ConfigError("spammer and adversary fractions must be nonnegative "
                                          "and sum to at most 1");
                    points.push_back({"adv" + percent_label(adv) + "_spam" + percent_label(spam),
                                      0.0, 0, adv, spam});
                }
            break;
        case SweepKind::kGroupGrid:
            if (spec.adv_fractions.empty() || spec.low_fractions.empty())
                throw ConfigError("adv_fractions and low_fractions must be non-empty");
            for (double adv : spec.adv_fractions)
                for (double low : spec.low_fractions) {
                    if (adv < 0.0 || low < 0.0 || adv + low > 1.0)
                        throw ConfigError("adversary and low-skill fractions must be nonnegative "
                                          "and sum to at most 1");
                    points.push_back({"adv" + percent_label(adv) + "_low" + percent_label(low),
                                      0.0, 0, adv, low});
                }
            break;
    }
    return points;
}

GeneratedTrial generate_trial(const ExperimentSpec& spec, const PointPlan& point,
                              std::uint64_t trial_seed) {
    GeneratedTrial out;
    switch (spec.kind) {
        case SweepKind::kDiffVar: {
            CrowdGenConfig cfg = spec.gaussian;
            cfg.diff_var = point.diff_var;
            cfg.seed = trial_seed;
            Dataset d = generate_dataset(cfg);
            AnswerMatrix answers = std::move(d.answers);
            if (spec.assign_degree > 0 && spec.assign_degree < cfg.n_workers) {
                AssignmentGraph g = generate_regular_bipartite(
                    cfg.n_tasks, cfg.n_workers, spec.assign_degree, mix64(trial_seed, 0xA11));
                answers = restrict_to_graph(answers, g);
                if (answers.n_tasks() != cfg.n_tasks)
                    throw InternalError("task-regular restriction dropped a task");
            }
            out = {std::move(answers), std::move(d.probes), std::move(d.truth),
                   std::move(d.params)};
            break;
        }
        case SweepKind::kDegree: {
            CrowdGenConfig cfg = spec.gaussian;
            cfg.seed = trial_seed;
            Dataset d = generate_dataset(cfg);
            AssignmentGraph g = generate_regular_bipartite(cfg.n_tasks, cfg.n_workers,
                                                           point.degree, mix64(trial_seed, 0xA11));
            AnswerMatrix restricted = restrict_to_graph(d.answers, g);
            if (restricted.n_tasks() != d.answers.n_tasks())
                throw InternalError("task-regular restriction dropped a task");
            out = {std::move(restricted), std::move(d.probes), std::move(d.truth),
                   std::move(d.params)};
            break;
        }
        case SweepKind::kShaGrid: {
            ShaDataset d = generate_sha_dataset(spec.sha_workers, spec.sha_tasks, spec.sha_k,
                                                point.other_fraction, point.adv_fraction,
                                                trial_seed);
            AnswerMatrix answers = std::move(d.answers);
            if (spec.sha_degree > 0 && spec.sha_degree < spec.sha_workers) {
                AssignmentGraph g = generate_regular_bipartite(
                    spec.sha_tasks, spec.sha_workers, spec.sha_degree, mix64(trial_seed, 0xA11));
                answers = restrict_to_graph(answers, g);
                if (answers.n_tasks() != spec.sha_tasks)
                    throw InternalError("task-regular restriction dropped a task");
            }
            ProbeSet probes =
                sample_probes(d.truth, spec.sha_probe_count, mix64(trial_seed, 0x511));
            out = {std::move(answers), std::move(probes), std::move(d.truth), std::nullopt};
            break;
        }
        case SweepKind::kGroupGrid: {
            Uniform3Config cfg = spec.uniform3;
            cfg.adv_fraction = point.adv_fraction;
            cfg.low_skill_fraction = point.other_fraction;
            cfg.seed = trial_seed;
            Dataset d = generate_uniform3_dataset(cfg);
            out = {std::move(d.answers), std::move(d.probes), std::move(d.truth),
                   std::move(d.params)};
            break;
        }
    }
    return out;
}

TrialReport run_method(const ExperimentSpec& spec, Method method, const GeneratedTrial& data,
                       std::uint64_t method_seed, bool measure_runtime) {
    TrialReport report;
    report.skill_corr = kNan;
    report.diff_corr = kNan;
    report.runtime_ms = kNan;
    const ProbeSet unsup = ProbeSet::none(data.answers.n_tasks());
    auto start = std::chrono::steady_clock::now();
    InferredAnswers decisions;
    switch (method) {
        case Method::kPlu:
            decisions = plu(data.answers, method_seed).decisions;
            break;
        case Method::kSsPlu:
            decisions = ss_plu(data.answers, data.probes, method_seed).decisions;
            break;
        case Method::kUsSw:
            decisions = us_sw(data.answers, unsup, method_seed).decisions;
            break;
        case Method::kSsSw:
            decisions = us_sw(data.answers, data.probes, method_seed).decisions;
            break;
        case Method::kUsNeg:
            decisions = us_neg(data.answers, unsup, method_seed).decisions;
            break;
        case Method::kSsNeg:
            decisions = us_neg(data.answers, data.probes, method_seed).decisions;
            break;
        case Method::kUsHyb:
            decisions = us_hyb(data.answers, unsup, method_seed).decisions;
            break;
        case Method::kUsGem:
        case Method::kSsGem: {
            GemConfig cfg = spec.gem;
            cfg.seed = method_seed;
            GemResult res = run_gem(data.answers,
                                    method == Method::kSsGem ? data.probes : unsup, cfg);
            decisions = std::move(res.decisions);
            if (data.params) {
                RecoveryStats stats = recovery_stats(*data.params, to_model_params(res.params));
                report.skill_corr = stats.skill_corr;
                report.diff_corr = stats.diff_corr;
            }
            break;
        }
    }
    if (measure_runtime) {
        auto elapsed = std::chrono::steady_clock::now() - start;
        report.runtime_ms = std::chrono::duration<double, std::milli>(elapsed).count();
    }
    report.errors = score(decisions, data.truth, data.probes);
    return report;
}

std::vector<double> worker_accuracies(const GeneratedTrial& data) {
    std::vector<double> acc;
    acc.reserve(static_cast<size_t>(data.answers.n_workers()));
    for (int j = 0; j < data.answers.n_workers(); ++j) {
        auto ids = data.answers.worker_entry_ids(j);
        if (ids.empty()) continue;
        int correct = 0;
        for (int idx : ids) {
            const AnswerEntry& e = data.answers.entries()[static_cast<size_t>(idx)];
            if (e.answer == data.truth[static_cast<size_t>(e.task)]) ++correct;
        }
        acc.push_back(static_cast<double>(correct) / static_cast<double>(ids.size()));
    }
    return acc;
}

bool spec_has_probes(const ExperimentSpec& spec) {
    switch (spec.kind) {
        case SweepKind::kDiffVar:
        case SweepKind::kDegree:
            return spec.gaussian.probe_count > 0;
        case SweepKind::kShaGrid:
            return spec.sha_probe_count > 0;
        case SweepKind::kGroupGrid:
            return spec.uniform3.probe_count > 0;
    }
    return false;
}

double nan_mean(const std::vector<TrialReport>& trials, double TrialReport::* field) {
    double sum = 0.0;
    for (const TrialReport& t : trials) sum += t.*field;
    return sum / static_cast<double>(trials.size());
}

}  // namespace

ExperimentResult run_experiment(const ExperimentSpec& spec) {
    if (spec.n_trials < 1) throw ConfigError("n_trials must be at least 1");
    if (spec.methods.empty()) throw ConfigError("methods must be non-empty");
    if (spec.jobs < 1) throw ConfigError("jobs must be at least 1");

    const std::vector<PointPlan> points = plan_points(spec);
    const bool have_probes = spec_has_probes(spec);
    const size_t n_methods = spec.methods.size();
    std::vector<bool> skipped(n_methods);
    for (size_t mi = 0; mi < n_methods; ++mi)
        skipped[mi] = method_uses_probes(spec.methods[mi]) && !have_probes;

    const int total_jobs = static_cast<int>(points.size()) * spec.n_trials;
    std::vector<std::vector<TrialReport>> reports(static_cast<size_t>(total_jobs));
    std::vector<double> first_accuracies;

    std::atomic<int> next{0};
    std::mutex failure_mutex;
    std::exception_ptr failure;

    auto run_jobs = [&]() {
        for (;;) {
            int id = next.fetch_add(1);
            if (id >= total_jobs) break;
            try {
                int point = id / spec.n_trials;
                int trial = id % spec.n_trials;
                std::uint64_t trial_seed =
                    mix64(mix64(spec.seed, static_cast<std::uint64_t>(point)),
                          static_cast<std::uint64_t>(trial));
                GeneratedTrial data = generate_trial(spec, points[static_cast<size_t>(point)],
                                                     trial_seed);
                if (id == 0) first_accuracies = worker_accuracies(data);
                std::vector<TrialReport>& slot = reports[static_cast<size_t>(id)];
                slot.resize(n_methods);
                for (size_t mi = 0; mi < n_methods; ++mi) {
                    if (skipped[mi]) continue;
                    std::uint64_t method_seed =
                        mix64(trial_seed, 100 + static_cast<std::uint64_t>(
                                                    static_cast<int>(spec.methods[mi])));
                    slot[mi] = run_method(spec, spec.methods[mi], data, method_seed,
                                          spec.measure_runtime);
                }
            } catch (...) {
                std::lock_guard<std::mutex> lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                break;
            }
        }
    };

    if (spec.jobs == 1 || total_jobs == 1) {
        run_jobs();
    } else {
        std::vector<std::thread> pool;
        int n_threads = std::min(spec.jobs, total_jobs);
        pool.reserve(static_cast<size_t>(n_threads));
        for (int t = 0; t < n_threads; ++t) pool.emplace_back(run_jobs);
        for (std::thread& t : pool) t.join();
    }
    if (failure) std::rethrow_exception(failure);

    ExperimentResult result;
    result.methods = spec.methods;
    result.first_trial_accuracies = std::move(first_accuracies);
    for (const PointPlan& p : points) result.sweep_values.push_back(p.label);
    result.cells.reserve(points.size() * n_methods);
    for (size_t pi = 0; pi < points.size(); ++pi) {
        for (size_t mi = 0; mi < n_methods; ++mi) {
            CellResult cell;
            cell.sweep_value = points[pi].label;
            cell.method = spec.methods[mi];
            cell.skipped = skipped[mi];
            if (cell.skipped) {
                cell.mean_errors = cell.std_errors = cell.mean_runtime_ms = kNan;
                cell.mean_skill_corr = cell.mean_diff_corr = kNan;
            } else {
                cell.trials.reserve(static_cast<size_t>(spec.n_trials));
                double sum = 0.0, sum_sq = 0.0;
                for (int t = 0; t < spec.n_trials; ++t) {
                    const TrialReport& r =
                        reports[pi * static_cast<size_t>(spec.n_trials) + static_cast<size_t>(t)]
                               [mi];
                    cell.trials.push_back(r);
                    sum += r.errors;
                    sum_sq += static_cast<double>(r.errors) * r.errors;
                }
                double n = static_cast<double>(spec.n_trials);
                cell.mean_errors = sum / n;
                cell.std_errors = std::sqrt(std::max(0.0, sum_sq / n - cell.mean_errors * cell.mean_errors));
                cell.mean_runtime_ms = nan_mean(cell.trials, &TrialReport::runtime_ms);
                cell.mean_skill_corr = nan_mean(cell.trials, &TrialReport::skill_corr);
                cell.mean_diff_corr = nan_mean(cell.trials, &TrialReport::diff_corr);
            }
            result.cells.push_back(std::move(cell));
        }
    }
    return result;
}

void save_results_csv(const ExperimentResult& result, const std::string& path) {
    std::vector<std::vector<std::string>> rows;
    rows.reserve(result.cells.size());
    for (const CellResult& cell : result.cells)
        rows.push_back({cell.sweep_value, method_name(cell.method), fmt(cell.mean_errors),
                        fmt(cell.std_errors), fmt(cell.mean_runtime_ms)});
    write_csv(path, {"sweep_value", "method", "mean_errors", "std_errors", "mean_runtime_ms"},
              rows);
}

void save_results_md(const ExperimentResult& result, const std::string& path) {
    std::string text = "| sweep_value |";
    for (Method m : result.methods) text += " " + method_name(m) + " |";
    text += "\n|---|";
    for (size_t i = 0; i < result.methods.size(); ++i) text += "---|";
    text += "\n";
    char buf[64];
    for (size_t pi = 0; pi < result.sweep_values.size(); ++pi) {
        text += "| " + result.sweep_values[pi] + " |";
        for (size_t mi = 0; mi < result.methods.size(); ++mi) {
            const CellResult& cell = result.cell(static_cast<int>(pi), static_cast<int>(mi));
            if (cell.skipped) {
                text += " skipped |";
            } else {
                std::snprintf(buf, sizeof(buf), " %.2f ± %.2f |", cell.mean_errors,
                              cell.std_errors);
                text += buf;
            }
        }
        text += "\n";
    }
    write_text_file(path, text);
}

void save_accuracy_histogram(const ExperimentResult& result, const std::string& path) {
    constexpr int kBins = 10;
    std::vector<int> counts(kBins, 0);
    for (double a : result.first_trial_accuracies) {
        int bin = std::min(kBins - 1, static_cast<int>(a * kBins));
        ++counts[static_cast<size_t>(std::max(0, bin))];
    }
    std::vector<std::vector<std::string>> rows;
    for (int b = 0; b < kBins; ++b)
        rows.push_back({format_double(b / static_cast<double>(kBins)),
                        format_double((b + 1) / static_cast<double>(kBins)),
                        std::to_string(counts[static_cast<size_t>(b)])});
    write_csv(path, {"bin_lo", "bin_hi", "count"}, rows);
}

void save_recovery_csv(const ExperimentResult& result, const std::string& path) {
    std::vector<std::vector<std::string>> rows;
    for (const CellResult& cell : result.cells) {
        if (cell.method != Method::kUsGem && cell.method != Method::kSsGem) continue;
        rows.push_back({cell.sweep_value, method_name(cell.method), fmt(cell.mean_skill_corr),
                        fmt(cell.mean_diff_corr)});
    }
    write_csv(path, {"sweep_value", "method", "mean_skill_corr", "mean_diff_corr"}, rows);
}

}  // namespace crowdagg

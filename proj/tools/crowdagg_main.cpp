#include <cstdio>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "crowdagg/config.hpp"
#include "crowdagg/csv.hpp"
#include "crowdagg/data.hpp"
#include "crowdagg/error.hpp"
#include "crowdagg/experiment.hpp"
#include "crowdagg/gem.hpp"
#include "crowdagg/plurality.hpp"
#include "crowdagg/worker_model.hpp"

namespace {

using namespace crowdagg;

std::string join(const std::string& dir, const std::string& name) {
    return (std::filesystem::path(dir) / name).string();
}

void ensure_out_dir(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec || !std::filesystem::is_directory(dir))
        throw ConfigError("output directory '" + dir + "' cannot be created");
}

struct GenerateArgs {
    std::string config_path;
    std::string out_dir = ".";
    std::uint64_t seed = 0;
    bool seed_given = false;
};

void run_generate(const GenerateArgs& args) {
    GeneratorConfig cfg = load_generator_config(args.config_path);
    if (args.seed_given) {
        cfg.gaussian.seed = args.seed;
        cfg.uniform3.seed = args.seed;
    }
    ensure_out_dir(args.out_dir);
    std::fputs(echo_generator_config(cfg).c_str(), stdout);

    Dataset data = generate(cfg);
    save_answer_matrix(data.answers, join(args.out_dir, "answers.csv"));
    save_probe_set(data.probes, data.answers, join(args.out_dir, "probes.csv"));
    save_task_params(data.params.difficulty, data.truth, data.answers,
                     join(args.out_dir, "truth.csv"));
    save_worker_params(data.params, data.answers, join(args.out_dir, "params.csv"));
    std::printf("wrote answers.csv, probes.csv, truth.csv, params.csv to %s\n",
                args.out_dir.c_str());
}

struct AggregateArgs {
    std::string method;
    std::string answers_path;
    std::string probes_path;
    std::string graph_path;
    std::string out_dir = ".";
    int k = 0;
    std::uint64_t seed = kDefaultSeed;
    GemConfig gem;
};

void save_weights(const PluralityResult& res, const AnswerMatrix& m, const std::string& path) {
    std::vector<std::string> header = {"worker_id", "weight"};
    bool with_intentions = !res.intentions.empty();
    if (with_intentions) header.push_back("intention");
    std::vector<std::vector<std::string>> rows;
    for (int j = 0; j < m.n_workers(); ++j) {
        std::vector<std::string> row = {m.worker_name(j),
                                        format_double(res.weights[static_cast<size_t>(j)])};
        if (with_intentions)
            row.push_back(std::to_string(res.intentions[static_cast<size_t>(j)]));
        rows.push_back(std::move(row));
    }
    write_csv(path, header, rows);
}

void save_objective_trace(const PluralityResult& res, const std::string& path) {
    std::vector<std::vector<std::string>> rows;
    for (size_t i = 0; i < res.objective_trace.size(); ++i)
        rows.push_back({std::to_string(i), format_double(res.objective_trace[i])});
    write_csv(path, {"iter", "objective"}, rows);
}

void run_aggregate(const AggregateArgs& args) {
    Method method = parse_method(args.method);
    AnswerMatrix answers = load_answer_matrix(args.answers_path, args.k);
    if (!args.graph_path.empty())
        answers = restrict_to_graph(answers, load_assignment_graph(args.graph_path));

    ProbeSet probes = ProbeSet::none(answers.n_tasks());
    if (!args.probes_path.empty()) probes = load_probe_set(args.probes_path, answers);
    if (method_uses_probes(method) && probes.empty())
        throw ConfigError("method " + args.method + " needs probe supervision; pass --probes");

    ensure_out_dir(args.out_dir);
    std::printf("method = %s\n", method_name(method).c_str());
    std::printf("answers = %s\n", args.answers_path.c_str());
    std::printf("probes = %s\n", args.probes_path.empty() ? "none" : args.probes_path.c_str());
    std::printf("graph = %s\n", args.graph_path.empty() ? "none" : args.graph_path.c_str());
    std::printf("k = %d\n", answers.k());
    std::printf("seed = %llu\n", static_cast<unsigned long long>(args.seed));

    const std::string decisions_path = join(args.out_dir, "decisions.csv");
    const ProbeSet unsup = ProbeSet::none(answers.n_tasks());
    switch (method) {
        case Method::kPlu: {
            PluralityResult res = plu(answers, args.seed);
            save_decisions(res.decisions, answers, decisions_path);
            break;
        }
        case Method::kSsPlu: {
            PluralityResult res = ss_plu(answers, probes, args.seed);
            save_decisions(res.decisions, answers, decisions_path);
            save_weights(res, answers, join(args.out_dir, "weights.csv"));
            break;
        }
        case Method::kUsSw:
        case Method::kSsSw:
        case Method::kUsNeg:
        case Method::kSsNeg:
        case Method::kUsHyb: {
            const ProbeSet& used = method_uses_probes(method) ? probes : unsup;
            PluralityResult res;
            if (method == Method::kUsSw || method == Method::kSsSw)
                res = us_sw(answers, used, args.seed);
            else if (method == Method::kUsHyb)
                res = us_hyb(answers, used, args.seed);
            else
                res = us_neg(answers, used, args.seed);
            save_decisions(res.decisions, answers, decisions_path);
            save_weights(res, answers, join(args.out_dir, "weights.csv"));
            save_objective_trace(res, join(args.out_dir, "objective_trace.csv"));
            break;
        }
        case Method::kUsGem:
        case Method::kSsGem: {
            GemConfig cfg = args.gem;
            cfg.seed = args.seed;
            std::printf("gem_restarts = %d\n", cfg.n_restarts);
            std::printf("gem_max_outer = %d\n", cfg.max_outer_iters);
            std::printf("gem_tie_slopes = %s\n", cfg.tie_slopes ? "true" : "false");
            std::printf("gem_fit_adversaries = %s\n", cfg.fit_adversaries ? "true" : "false");
            GemResult res =
                run_gem(answers, method == Method::kSsGem ? probes : unsup, cfg);
            save_decisions(res.decisions, answers, decisions_path);
            save_gem_params(res, answers, join(args.out_dir, "params.csv"),
                            join(args.out_dir, "task_params.csv"));
            save_ll_trace(res, join(args.out_dir, "ll_trace.csv"));
            break;
        }
    }
    std::printf("wrote decisions.csv to %s\n", args.out_dir.c_str());
}

struct ScoreArgs {
    std::string decisions_path;
    std::string truth_path;
    std::string probes_path;
};

void run_score(const ScoreArgs& args) {
    auto decisions = load_label_file(args.decisions_path);
    auto truth_rows = load_label_file(args.truth_path);
    std::map<std::string, int> truth(truth_rows.begin(), truth_rows.end());
    std::map<std::string, int> probe_labels;
    if (!args.probes_path.empty()) {
        auto probe_rows = load_label_file(args.probes_path);
        probe_labels.insert(probe_rows.begin(), probe_rows.end());
    }
    int errors = 0, scored = 0;
    for (const auto& [task, label] : decisions) {
        auto it = truth.find(task);
        if (it == truth.end())
            throw ValidationError(args.truth_path + ": no ground truth for task '" + task + "'");
        if (probe_labels.count(task)) continue;
        ++scored;
        if (label != it->second) ++errors;
    }
    std::printf("scored_tasks = %d\n", scored);
    std::printf("errors = %d\n", errors);
}

struct ExperimentArgs {
    std::string spec_path;
    std::string out_dir = ".";
    int jobs = 0;
    std::uint64_t seed = 0;
    bool seed_given = false;
};

void run_experiment_cmd(const ExperimentArgs& args) {
    ExperimentSpec spec = load_experiment_spec(args.spec_path);
    if (args.seed_given) {
        spec.seed = args.seed;
        spec.gaussian.seed = args.seed;
        spec.uniform3.seed = args.seed;
    }
    if (args.jobs > 0) spec.jobs = args.jobs;
    ensure_out_dir(args.out_dir);
    std::fputs(echo_experiment_spec(spec).c_str(), stdout);

    ExperimentResult result = run_experiment(spec);
    save_results_csv(result, join(args.out_dir, "results.csv"));
    save_results_md(result, join(args.out_dir, "results.md"));
    save_accuracy_histogram(result, join(args.out_dir, "accuracy_hist.csv"));
    bool any_gem = false;
    for (Method m : spec.methods)
        if (m == Method::kUsGem || m == Method::kSsGem) any_gem = true;
    if (any_gem) save_recovery_csv(result, join(args.out_dir, "recovery.csv"));
    std::printf("wrote results.csv, results.md, accuracy_hist.csv%s to %s\n",
                any_gem ? ", recovery.csv" : "", args.out_dir.c_str());
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Crowd answer aggregation: synthetic crowds, aggregators, experiment sweeps"};
    app.require_subcommand(1);

    GenerateArgs gen;
    CLI::App* cmd_gen = app.add_subcommand("generate", "Generate a synthetic crowd dataset");
    cmd_gen->add_option("--config", gen.config_path, "crowd config file (key = value lines)")
        ->required();
    cmd_gen->add_option("--out", gen.out_dir, "output directory");
    CLI::Option* gen_seed = cmd_gen->add_option("--seed", gen.seed, "override the config seed");

    AggregateArgs agg;
    CLI::App* cmd_agg = app.add_subcommand("aggregate", "Aggregate an answer matrix");
    cmd_agg->add_option("method", agg.method,
                        "plu, ss-plu, us-sw, ss-sw, us-neg, ss-neg, us-gem, ss-gem or us-hyb")
        ->required();
    cmd_agg->add_option("answers", agg.answers_path, "answers.csv (task_id,worker_id,answer)")
        ->required();
    cmd_agg->add_option("--probes", agg.probes_path, "probe task labels (task_id,answer)");
    cmd_agg->add_option("--graph", agg.graph_path, "assignment graph to restrict answers to");
    cmd_agg->add_option("--k", agg.k, "answer-category count (default: inferred)");
    cmd_agg->add_option("--seed", agg.seed, "tie-break / fitting seed");
    cmd_agg->add_option("--gem-restarts", agg.gem.n_restarts, "GEM restarts");
    cmd_agg->add_option("--gem-max-outer", agg.gem.max_outer_iters, "GEM outer-iteration cap");
    cmd_agg->add_flag("--gem-tie-slopes", agg.gem.tie_slopes, "share one slope across workers");
    bool honest_only = false;
    cmd_agg->add_flag("--gem-honest-only", honest_only, "fit without the adversary family");
    cmd_agg->add_option("--out", agg.out_dir, "output directory");

    ScoreArgs sc;
    CLI::App* cmd_score = app.add_subcommand("score", "Count decisions differing from truth");
    cmd_score->add_option("decisions", sc.decisions_path, "decisions.csv")->required();
    cmd_score->add_option("truth", sc.truth_path, "ground-truth labels (task_id,z)")->required();
    cmd_score->add_option("--probes", sc.probes_path, "probe tasks to exclude from the count");

    ExperimentArgs exp;
    CLI::App* cmd_exp = app.add_subcommand("experiment", "Run a multi-trial sweep");
    cmd_exp->add_option("--spec", exp.spec_path, "experiment spec file")->required();
    cmd_exp->add_option("--out", exp.out_dir, "output directory");
    cmd_exp->add_option("--jobs", exp.jobs, "worker threads (default: spec value)");
    CLI::Option* exp_seed = cmd_exp->add_option("--seed", exp.seed, "override the spec seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (cmd_gen->parsed()) {
            gen.seed_given = gen_seed->count() > 0;
            run_generate(gen);
        } else if (cmd_agg->parsed()) {
            agg.gem.fit_adversaries = !honest_only;
            run_aggregate(agg);
        } else if (cmd_score->parsed()) {
            run_score(sc);
        } else if (cmd_exp->parsed()) {
            exp.seed_given = exp_seed->count() > 0;
            run_experiment_cmd(exp);
        }
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const ParseError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const ValidationError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "internal error: %s\n", e.what());
        return 1;
    }
    return 0;
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "crowdagg/csv.hpp"

using crowdagg::CsvTable;
using crowdagg::read_csv;

namespace {

namespace fs = std::filesystem;

struct CmdResult {
    int status = -1;
    std::string output;  // stdout and stderr interleaved
};

CmdResult run_cli(const std::string& args) {
    std::string cmd = std::string(CROWDAGG_CLI_PATH) + " " + args + " 2>&1";
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    CmdResult res;
    char buf[4096];
    size_t n;
    while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) res.output.append(buf, n);
    int rc = pclose(pipe);
    res.status = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
    return res;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    REQUIRE(out.good());
    out << text;
}

// Fresh scratch directory per test case; removed on destruction.
struct Scratch {
    explicit Scratch(const std::string& name) : dir("cli_scratch_" + name) {
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    ~Scratch() { fs::remove_all(dir); }
    std::string operator/(const std::string& name) const { return dir + "/" + name; }
    std::string dir;
};

const std::string kCrowdCfg =
    "generator = gaussian\n"
    "n_workers = 12\n"
    "n_tasks = 10\n"
    "k = 4\n"
    "skill_mean = 1\n"
    "skill_var = 100\n"
    "slope_mean = 0.5\n"
    "slope_var = 0.01\n"
    "diff_mean = 2\n"
    "diff_var = 25\n"
    "adv_fraction = 0.25\n"
    "adv_kind = simple\n"
    "probe_count = 3\n"
    "seed = 5\n";

// Generates the standard small crowd into the scratch dir and returns it.
void generate_crowd(const Scratch& s) {
    CmdResult gen = run_cli("generate --config " + (s / "crowd.cfg") + " --out " + s.dir);
    REQUIRE(gen.status == 0);
}

}  // namespace

TEST_CASE("generate writes the four dataset files") {
    Scratch s("gen");
    write_file(s / "crowd.cfg", kCrowdCfg);
    CmdResult res = run_cli("generate --config " + (s / "crowd.cfg") + " --out " + s.dir);
    CHECK(res.status == 0);
    CHECK(res.output.find("n_workers = 12") != std::string::npos);

    CHECK(read_csv(s / "answers.csv").rows.size() == 120);  // complete 10 x 12
    CHECK(read_csv(s / "probes.csv").rows.size() == 3);
    CHECK(read_csv(s / "truth.csv").rows.size() == 10);
    CHECK(read_csv(s / "params.csv").rows.size() == 12);
}

TEST_CASE("generate with no probes leaves a header-only probe file") {
    Scratch s("noprobe");
    std::string cfg = kCrowdCfg;
    cfg.replace(cfg.find("probe_count = 3"), 15, "probe_count = 0");
    write_file(s / "crowd.cfg", cfg);
    CmdResult res = run_cli("generate --config " + (s / "crowd.cfg") + " --out " + s.dir);
    CHECK(res.status == 0);
    CHECK(slurp(s / "probes.csv") == "task_id,answer\n");
}

TEST_CASE("generate is seed-deterministic and --seed overrides the config") {
    Scratch s("seed");
    write_file(s / "crowd.cfg", kCrowdCfg);
    fs::create_directories(s / "a");
    fs::create_directories(s / "b");
    fs::create_directories(s / "c");
    CHECK(run_cli("generate --config " + (s / "crowd.cfg") + " --out " + (s / "a")).status == 0);
    CHECK(run_cli("generate --config " + (s / "crowd.cfg") + " --out " + (s / "b")).status == 0);
    CHECK(run_cli("generate --config " + (s / "crowd.cfg") + " --out " + (s / "c") +
                  " --seed 6")
              .status == 0);
    CHECK(slurp(s / "a/answers.csv") == slurp(s / "b/answers.csv"));
    CHECK(slurp(s / "a/answers.csv") != slurp(s / "c/answers.csv"));
}

TEST_CASE("aggregate us-neg emits decisions, weights and a trace") {
    Scratch s("usneg");
    write_file(s / "crowd.cfg", kCrowdCfg);
    generate_crowd(s);
    CmdResult res =
        run_cli("aggregate us-neg " + (s / "answers.csv") + " --out " + (s / "fit"));
    CHECK(res.status == 0);
    CHECK(res.output.find("method = US-NEG") != std::string::npos);
    CHECK(read_csv(s / "fit/decisions.csv").rows.size() == 10);
    CsvTable weights = read_csv(s / "fit/weights.csv");
    CHECK(weights.header == std::vector<std::string>{"worker_id", "weight"});
    CHECK(weights.rows.size() == 12);
    CHECK(read_csv(s / "fit/objective_trace.csv").header ==
          std::vector<std::string>{"iter", "objective"});

    // Same command, same bytes.
    CmdResult again =
        run_cli("aggregate us-neg " + (s / "answers.csv") + " --out " + (s / "fit2"));
    CHECK(again.status == 0);
    CHECK(slurp(s / "fit/decisions.csv") == slurp(s / "fit2/decisions.csv"));
    CHECK(slurp(s / "fit/weights.csv") == slurp(s / "fit2/weights.csv"));
}

TEST_CASE("aggregate us-sw reports intentions alongside weights") {
    Scratch s("ussw");
    write_file(s / "crowd.cfg", kCrowdCfg);
    generate_crowd(s);
    CmdResult res = run_cli("aggregate us-sw " + (s / "answers.csv") + " --out " + (s / "fit"));
    CHECK(res.status == 0);
    CsvTable weights = read_csv(s / "fit/weights.csv");
    CHECK(weights.header == std::vector<std::string>{"worker_id", "weight", "intention"});
}

TEST_CASE("aggregate ss-gem emits parameters and a likelihood trace") {
    Scratch s("ssgem");
    write_file(s / "crowd.cfg", kCrowdCfg);
    generate_crowd(s);
    CmdResult res = run_cli("aggregate ss-gem " + (s / "answers.csv") + " --probes " +
                            (s / "probes.csv") + " --gem-max-outer 5 --out " + (s / "fit"));
    CHECK(res.status == 0);
    CHECK(res.output.find("gem_max_outer = 5") != std::string::npos);
    CHECK(read_csv(s / "fit/decisions.csv").rows.size() == 10);
    CsvTable params = read_csv(s / "fit/params.csv");
    CHECK(params.header == std::vector<std::string>{"worker_id", "v", "d", "a"});
    CHECK(params.rows.size() == 12);
    CHECK(read_csv(s / "fit/task_params.csv").rows.size() == 10);
    CsvTable trace = read_csv(s / "fit/ll_trace.csv");
    CHECK(!trace.rows.empty());
}

TEST_CASE("probe-requiring methods fail fast without probes") {
    Scratch s("failprobe");
    write_file(s / "crowd.cfg", kCrowdCfg);
    generate_crowd(s);
    CmdResult res = run_cli("aggregate ss-sw " + (s / "answers.csv") + " --out " + s.dir);
    CHECK(res.status == 2);
    CHECK(res.output.find("probe") != std::string::npos);
}

TEST_CASE("unknown methods and missing flags exit with usage errors") {
    Scratch s("usage");
    write_file(s / "crowd.cfg", kCrowdCfg);
    generate_crowd(s);
    CHECK(run_cli("aggregate median " + (s / "answers.csv")).status == 2);
    CHECK(run_cli("experiment").status == 2);
    CHECK(run_cli("generate --config " + (s / "missing.cfg")).status == 2);
}

TEST_CASE("score reports exact error and coverage counts") {
    Scratch s("score");
    write_file(s / "crowd.cfg", kCrowdCfg);
    generate_crowd(s);
    fs::create_directories(s / "fit");
    CmdResult agg =
        run_cli("aggregate plu " + (s / "answers.csv") + " --out " + (s / "fit"));
    REQUIRE(agg.status == 0);

    // Truth scored against itself is error-free over all ten tasks.
    CmdResult self = run_cli("score " + (s / "truth.csv") + " " + (s / "truth.csv"));
    CHECK(self.status == 0);
    CHECK(self.output.find("scored_tasks = 10") != std::string::npos);
    CHECK(self.output.find("errors = 0") != std::string::npos);

    // Excluding the three probes leaves seven scored tasks.
    CmdResult scored = run_cli("score " + (s / "fit/decisions.csv") + " " + (s / "truth.csv") +
                               " --probes " + (s / "probes.csv"));
    CHECK(scored.status == 0);
    CHECK(scored.output.find("scored_tasks = 7") != std::string::npos);
    CHECK(scored.output.find("errors = ") != std::string::npos);
}

TEST_CASE("experiment runs a spec end to end") {
    Scratch s("exp");
    write_file(s / "sweep.spec",
               "sweep = diff_var\n"
               "methods = plu, us-neg\n"
               "diff_vars = 250\n"
               "n_trials = 2\n"
               "assign_degree = 8\n"
               "n_workers = 12\n"
               "n_tasks = 10\n"
               "k = 4\n"
               "skill_mean = 1\n"
               "skill_var = 100\n"
               "slope_mean = 0.5\n"
               "slope_var = 0.01\n"
               "diff_mean = 2\n"
               "adv_fraction = 0.25\n"
               "adv_kind = simple\n"
               "probe_count = 2\n"
               "seed = 3\n");
    CmdResult res =
        run_cli("experiment --spec " + (s / "sweep.spec") + " --out " + (s / "runs"));
    CHECK(res.status == 0);
    CHECK(res.output.find("sweep = diff_var") != std::string::npos);

    CsvTable results = read_csv(s / "runs/results.csv");
    CHECK(results.rows.size() == 2);  // one sweep point x two methods
    CHECK(slurp(s / "runs/results.md").find("US-NEG") != std::string::npos);
    CHECK(read_csv(s / "runs/accuracy_hist.csv").rows.size() == 10);

    // Same spec, same bytes.
    CmdResult again =
        run_cli("experiment --spec " + (s / "sweep.spec") + " --out " + (s / "runs2"));
    CHECK(again.status == 0);
    CHECK(slurp(s / "runs/results.csv") == slurp(s / "runs2/results.csv"));
}

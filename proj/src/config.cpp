#include "crowdagg/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "crowdagg/csv.hpp"
#include "crowdagg/error.hpp"

namespace crowdagg {

namespace {

std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

// Typed reads over a parsed key=value map. Every consumed key is recorded
// so unknown keys can be reported at the end.
class ConfigReader {
public:
    ConfigReader(std::map<std::string, std::string> values, std::string origin)
        : values_(std::move(values)), origin_(std::move(origin)) {}

    bool has(const std::string& key) const { return values_.count(key) != 0; }

    std::string get_string(const std::string& key, const std::string& fallback) {
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        used_.insert(key);
        return it->second;
    }

    double get_double(const std::string& key, double fallback) {
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        used_.insert(key);
        return parse_double(it->second, origin_ + ": key '" + key + "'");
    }

    int get_int(const std::string& key, int fallback) {
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        used_.insert(key);
        return static_cast<int>(parse_long(it->second, origin_ + ": key '" + key + "'"));
    }

    std::uint64_t get_seed(const std::string& key, std::uint64_t fallback) {
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        used_.insert(key);
        long v = parse_long(it->second, origin_ + ": key '" + key + "'");
        if (v < 0) throw ConfigError(origin_ + ": key '" + key + "' must be nonnegative");
        return static_cast<std::uint64_t>(v);
    }

    bool get_bool(const std::string& key, bool fallback) {
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        used_.insert(key);
        if (it->second == "true" || it->second == "1") return true;
        if (it->second == "false" || it->second == "0") return false;
        throw ConfigError(origin_ + ": key '" + key + "' must be true or false");
    }

    std::vector<std::string> get_list(const std::string& key) {
        auto it = values_.find(key);
        if (it == values_.end())
            throw ConfigError(origin_ + ": missing required key '" + key + "'");
        used_.insert(key);
        std::vector<std::string> items;
        std::stringstream ss(it->second);
        std::string item;
        while (std::getline(ss, item, ',')) {
            item = trim(item);
            if (!item.empty()) items.push_back(item);
        }
        if (items.empty())
            throw ConfigError(origin_ + ": key '" + key + "' must list at least one value");
        return items;
    }

    std::vector<double> get_double_list(const std::string& key) {
        std::vector<double> out;
        for (const std::string& item : get_list(key))
            out.push_back(parse_double(item, origin_ + ": key '" + key + "'"));
        return out;
    }

    std::vector<int> get_int_list(const std::string& key) {
        std::vector<int> out;
        for (const std::string& item : get_list(key))
            out.push_back(static_cast<int>(parse_long(item, origin_ + ": key '" + key + "'")));
        return out;
    }

    void finish() const {
        for (const auto& [key, value] : values_)
            if (!used_.count(key))
                throw ConfigError(origin_ + ": unknown key '" + key + "'");
    }

    const std::string& origin() const { return origin_; }

private:
    std::map<std::string, std::string> values_;
    std::set<std::string> used_;
    std::string origin_;
};

void read_gaussian_keys(ConfigReader& r, CrowdGenConfig& g) {
    g.n_workers = r.get_int("n_workers", g.n_workers);
    g.n_tasks = r.get_int("n_tasks", g.n_tasks);
    g.k = r.get_int("k", g.k);
    g.skill_mean = r.get_double("skill_mean", g.skill_mean);
    g.skill_var = r.get_double("skill_var", g.skill_var);
    g.slope_mean = r.get_double("slope_mean", g.slope_mean);
    g.slope_var = r.get_double("slope_var", g.slope_var);
    g.diff_mean = r.get_double("diff_mean", g.diff_mean);
    g.diff_var = r.get_double("diff_var", g.diff_var);
    g.adv_fraction = r.get_double("adv_fraction", g.adv_fraction);
    g.adv_theta_gap = r.get_double("adv_theta_gap", g.adv_theta_gap);
    g.probe_count = r.get_int("probe_count", g.probe_count);
    g.seed = r.get_seed("seed", g.seed);
    std::string kind = r.get_string("adv_kind", "simple");
    if (kind == "simple")
        g.adv_kind = AdversaryKind::kSimple;
    else if (kind == "complex")
        g.adv_kind = AdversaryKind::kComplex;
    else
        throw ConfigError(r.origin() + ": adv_kind must be 'simple' or 'complex'");
}

void read_uniform3_keys(ConfigReader& r, Uniform3Config& u) {
    u.n_workers = r.get_int("n_workers", u.n_workers);
    u.n_tasks = r.get_int("n_tasks", u.n_tasks);
    u.k = r.get_int("k", u.k);
    u.adv_fraction = r.get_double("adv_fraction", u.adv_fraction);
    u.low_skill_fraction = r.get_double("low_fraction", u.low_skill_fraction);
    u.high_skill_lo = r.get_double("high_skill_lo", u.high_skill_lo);
    u.high_skill_hi = r.get_double("high_skill_hi", u.high_skill_hi);
    u.low_skill_lo = r.get_double("low_skill_lo", u.low_skill_lo);
    u.low_skill_hi = r.get_double("low_skill_hi", u.low_skill_hi);
    u.diff_lo = r.get_double("diff_lo", u.diff_lo);
    u.diff_hi = r.get_double("diff_hi", u.diff_hi);
    u.slope_mean = r.get_double("slope_mean", u.slope_mean);
    u.slope_var = r.get_double("slope_var", u.slope_var);
    u.probe_count = r.get_int("probe_count", u.probe_count);
    u.seed = r.get_seed("seed", u.seed);
}

void read_gem_keys(ConfigReader& r, GemConfig& gem) {
    gem.n_restarts = r.get_int("gem_restarts", gem.n_restarts);
    gem.max_outer_iters = r.get_int("gem_max_outer", gem.max_outer_iters);
    gem.tie_slopes = r.get_bool("gem_tie_slopes", gem.tie_slopes);
    gem.fit_adversaries = r.get_bool("gem_fit_adversaries", gem.fit_adversaries);
}

std::string bool_word(bool v) { return v ? "true" : "false"; }

void echo_gaussian(std::string& out, const CrowdGenConfig& g, bool full) {
    if (full) out += "generator = gaussian\n";
    out += "n_workers = " + std::to_string(g.n_workers) + "\n";
    out += "n_tasks = " + std::to_string(g.n_tasks) + "\n";
    out += "k = " + std::to_string(g.k) + "\n";
    out += "skill_mean = " + format_double(g.skill_mean) + "\n";
    out += "skill_var = " + format_double(g.skill_var) + "\n";
    out += "slope_mean = " + format_double(g.slope_mean) + "\n";
    out += "slope_var = " + format_double(g.slope_var) + "\n";
    out += "diff_mean = " + format_double(g.diff_mean) + "\n";
    out += "diff_var = " + format_double(g.diff_var) + "\n";
    out += "adv_fraction = " + format_double(g.adv_fraction) + "\n";
    out += std::string("adv_kind = ") +
           (g.adv_kind == AdversaryKind::kSimple ? "simple" : "complex") + "\n";
    out += "adv_theta_gap = " + format_double(g.adv_theta_gap) + "\n";
    out += "probe_count = " + std::to_string(g.probe_count) + "\n";
    if (full) out += "seed = " + std::to_string(g.seed) + "\n";
}

void echo_uniform3(std::string& out, const Uniform3Config& u, bool full) {
    if (full) out += "generator = uniform3\n";
    out += "n_workers = " + std::to_string(u.n_workers) + "\n";
    out += "n_tasks = " + std::to_string(u.n_tasks) + "\n";
    out += "k = " + std::to_string(u.k) + "\n";
    out += "adv_fraction = " + format_double(u.adv_fraction) + "\n";
    out += "low_fraction = " + format_double(u.low_skill_fraction) + "\n";
    out += "high_skill_lo = " + format_double(u.high_skill_lo) + "\n";
    out += "high_skill_hi = " + format_double(u.high_skill_hi) + "\n";
    out += "low_skill_lo = " + format_double(u.low_skill_lo) + "\n";
    out += "low_skill_hi = " + format_double(u.low_skill_hi) + "\n";
    out += "diff_lo = " + format_double(u.diff_lo) + "\n";
    out += "diff_hi = " + format_double(u.diff_hi) + "\n";
    out += "slope_mean = " + format_double(u.slope_mean) + "\n";
    out += "slope_var = " + format_double(u.slope_var) + "\n";
    out += "probe_count = " + std::to_string(u.probe_count) + "\n";
    if (full) out += "seed = " + std::to_string(u.seed) + "\n";
}

}  // namespace

std::map<std::string, std::string> parse_config_text(const std::string& text,
                                                     const std::string& origin) {
    std::map<std::string, std::string> values;
    std::stringstream ss(text);
    std::string line;
    long line_no = 0;
    while (std::getline(ss, line)) {
        ++line_no;
        size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        size_t eq = line.find('=');
        std::string where = origin + ":" + std::to_string(line_no);
        if (eq == std::string::npos)
            throw ConfigError(where + ": expected key = value");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError(where + ": empty key");
        if (value.empty()) throw ConfigError(where + ": empty value for key '" + key + "'");
        if (!values.emplace(key, value).second)
            throw ConfigError(where + ": duplicate key '" + key + "'");
    }
    return values;
}

std::map<std::string, std::string> parse_config_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError(path + ": cannot open file");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str(), path);
}

GeneratorConfig load_generator_config(const std::string& path) {
    ConfigReader r(parse_config_file(path), path);
    GeneratorConfig cfg;
    std::string kind = r.get_string("generator", "gaussian");
    if (kind == "gaussian") {
        cfg.kind = GeneratorConfig::Kind::kGaussian;
        read_gaussian_keys(r, cfg.gaussian);
    } else if (kind == "uniform3") {
        cfg.kind = GeneratorConfig::Kind::kUniform3;
        read_uniform3_keys(r, cfg.uniform3);
    } else {
        throw ConfigError(path + ": generator must be 'gaussian' or 'uniform3'");
    }
    r.finish();
    return cfg;
}

Dataset generate(const GeneratorConfig& cfg) {
    if (cfg.kind == GeneratorConfig::Kind::kGaussian) return generate_dataset(cfg.gaussian);
    return generate_uniform3_dataset(cfg.uniform3);
}

std::string echo_generator_config(const GeneratorConfig& cfg) {
    std::string out;
    if (cfg.kind == GeneratorConfig::Kind::kGaussian)
        echo_gaussian(out, cfg.gaussian, true);
    else
        echo_uniform3(out, cfg.uniform3, true);
    return out;
}

ExperimentSpec load_experiment_spec(const std::string& path) {
    ConfigReader r(parse_config_file(path), path);
    ExperimentSpec spec;

    std::string sweep = r.get_string("sweep", "");
    if (sweep == "diff_var")
        spec.kind = SweepKind::kDiffVar;
    else if (sweep == "degree")
        spec.kind = SweepKind::kDegree;
    else if (sweep == "sha_grid")
        spec.kind = SweepKind::kShaGrid;
    else if (sweep == "group_grid")
        spec.kind = SweepKind::kGroupGrid;
    else
        throw ConfigError(path +
                          ": sweep must be one of diff_var, degree, sha_grid, group_grid");

    for (const std::string& name : r.get_list("methods"))
        spec.methods.push_back(parse_method(name));
    spec.n_trials = r.get_int("n_trials", spec.n_trials);
    spec.seed = r.get_seed("seed", spec.seed);
    spec.measure_runtime = r.get_bool("measure_runtime", spec.measure_runtime);
    spec.jobs = r.get_int("jobs", spec.jobs);
    read_gem_keys(r, spec.gem);

    switch (spec.kind) {
        case SweepKind::kDiffVar:
            read_gaussian_keys(r, spec.gaussian);
            spec.diff_vars = r.get_double_list("diff_vars");
            spec.assign_degree = r.get_int("assign_degree", spec.assign_degree);
            if (spec.assign_degree < 0 || spec.assign_degree > spec.gaussian.n_workers)
                throw ConfigError("assign_degree must be 0 (full matrix) or 1..n_workers");
            break;
        case SweepKind::kDegree:
            read_gaussian_keys(r, spec.gaussian);
            spec.degrees = r.get_int_list("degrees");
            break;
        case SweepKind::kShaGrid:
            spec.sha_workers = r.get_int("n_workers", spec.sha_workers);
            spec.sha_tasks = r.get_int("n_tasks", spec.sha_tasks);
            spec.sha_k = r.get_int("k", spec.sha_k);
            spec.sha_probe_count = r.get_int("probe_count", spec.sha_probe_count);
            spec.sha_degree = r.get_int("assign_degree", spec.sha_degree);
            if (spec.sha_degree < 0 || spec.sha_degree > spec.sha_workers)
                throw ConfigError("assign_degree must be 0 (full matrix) or 1..n_workers");
            spec.adv_fractions = r.get_double_list("adv_fractions");
            spec.spam_fractions = r.get_double_list("spam_fractions");
            break;
        case SweepKind::kGroupGrid:
            read_uniform3_keys(r, spec.uniform3);
            spec.adv_fractions = r.get_double_list("adv_fractions");
            spec.low_fractions = r.get_double_list("low_fractions");
            break;
    }
    r.finish();
    // The spec-level seed governs the whole sweep; base-generator seeds are
    // replaced per trial and echoing them would be misleading.
    spec.gaussian.seed = spec.seed;
    spec.uniform3.seed = spec.seed;
    return spec;
}

std::string echo_experiment_spec(const ExperimentSpec& spec) {
    std::string out;
    switch (spec.kind) {
        case SweepKind::kDiffVar:
            out += "sweep = diff_var\n";
            break;
        case SweepKind::kDegree:
            out += "sweep = degree\n";
            break;
        case SweepKind::kShaGrid:
            out += "sweep = sha_grid\n";
            break;
        case SweepKind::kGroupGrid:
            out += "sweep = group_grid\n";
            break;
    }
    out += "methods = ";
    for (size_t i = 0; i < spec.methods.size(); ++i) {
        std::string name = method_name(spec.methods[i]);
        std::transform(name.begin(), name.end(), name.begin(),
                       [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        out += (i ? "," : "") + name;
    }
    out += "\n";
    out += "n_trials = " + std::to_string(spec.n_trials) + "\n";
    out += "seed = " + std::to_string(spec.seed) + "\n";
    out += "jobs = " + std::to_string(spec.jobs) + "\n";
    out += "measure_runtime = " + bool_word(spec.measure_runtime) + "\n";

    auto list_double = [](const std::vector<double>& v) {
        std::string s;
        for (size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + format_double(v[i]);
        return s;
    };
    switch (spec.kind) {
        case SweepKind::kDiffVar:
            out += "diff_vars = " + list_double(spec.diff_vars) + "\n";
            out += "assign_degree = " + std::to_string(spec.assign_degree) + "\n";
            echo_gaussian(out, spec.gaussian, false);
            break;
        case SweepKind::kDegree: {
            std::string s;
            for (size_t i = 0; i < spec.degrees.size(); ++i)
                s += (i ? "," : "") + std::to_string(spec.degrees[i]);
            out += "degrees = " + s + "\n";
            echo_gaussian(out, spec.gaussian, false);
            break;
        }
        case SweepKind::kShaGrid:
            out += "adv_fractions = " + list_double(spec.adv_fractions) + "\n";
            out += "spam_fractions = " + list_double(spec.spam_fractions) + "\n";
            out += "n_workers = " + std::to_string(spec.sha_workers) + "\n";
            out += "n_tasks = " + std::to_string(spec.sha_tasks) + "\n";
            out += "k = " + std::to_string(spec.sha_k) + "\n";
            out += "assign_degree = " + std::to_string(spec.sha_degree) + "\n";
            out += "probe_count = " + std::to_string(spec.sha_probe_count) + "\n";
            break;
        case SweepKind::kGroupGrid:
            out += "adv_fractions = " + list_double(spec.adv_fractions) + "\n";
            out += "low_fractions = " + list_double(spec.low_fractions) + "\n";
            echo_uniform3(out, spec.uniform3, false);
            break;
    }
    out += "gem_restarts = " + std::to_string(spec.gem.n_restarts) + "\n";
    out += "gem_max_outer = " + std::to_string(spec.gem.max_outer_iters) + "\n";
    out += "gem_tie_slopes = " + bool_word(spec.gem.tie_slopes) + "\n";
    out += "gem_fit_adversaries = " + bool_word(spec.gem.fit_adversaries) + "\n";
    return out;
}

}  // namespace crowdagg

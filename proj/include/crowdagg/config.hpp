#pragma once

#include <map>
#include <string>

#include "crowdagg/experiment.hpp"
#include "crowdagg/worker_model.hpp"

namespace crowdagg {

// Flat key=value configuration text: one pair per line, '#' starts a
// comment, blank lines are ignored, duplicate keys are rejected.
std::map<std::string, std::string> parse_config_text(const std::string& text,
                                                     const std::string& origin);
std::map<std::string, std::string> parse_config_file(const std::string& path);

// Synthetic-crowd generation config for the `generate` subcommand: either
// the Gaussian crowd or the three-group uniform crowd, selected by the
// `generator` key.
struct GeneratorConfig {
    enum class Kind { kGaussian, kUniform3 };
    Kind kind = Kind::kGaussian;
    CrowdGenConfig gaussian;
    Uniform3Config uniform3;
};

GeneratorConfig load_generator_config(const std::string& path);
Dataset generate(const GeneratorConfig& cfg);
// Canonical key=value rendering of every resolved setting, echoed by the
// CLI so each run records exactly what it did.
std::string echo_generator_config(const GeneratorConfig& cfg);

ExperimentSpec load_experiment_spec(const std::string& path);
std::string echo_experiment_spec(const ExperimentSpec& spec);

}  // namespace crowdagg

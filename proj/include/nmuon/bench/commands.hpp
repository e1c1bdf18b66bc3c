#pragma once

// The five bench subcommands. Each writes CSV files plus manifest.json into
// the output directory and returns the process exit code.

#include <filesystem>
#include <iosfwd>
#include <string>

#include "nmuon/bench/config.hpp"

namespace nmuon::bench {

inline constexpr int kExitPass = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;

struct CommandOptions {
    std::string filter;         // verify: substring of check names
    bool corrupt_plan = false;  // verify / plans: inject a corrupted plan
    std::ostream* log = nullptr;  // progress and summaries; std::cout when null
};

int cmd_verify(const ExperimentConfig& cfg, const CommandOptions& opts);
int cmd_spike(const ExperimentConfig& cfg, const CommandOptions& opts);
int cmd_score_study(const ExperimentConfig& cfg, const CommandOptions& opts);
int cmd_plans(const ExperimentConfig& cfg, const CommandOptions& opts);
int cmd_train(const ExperimentConfig& cfg, const CommandOptions& opts);

// Dispatches on cfg.experiment.
int run_experiment(const ExperimentConfig& cfg, const CommandOptions& opts);

// Preset used when a subcommand is given neither --config nor --preset.
std::string default_preset(Experiment e);

}  // namespace nmuon::bench

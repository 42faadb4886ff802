#pragma once

#include <optional>
#include <string>

#include "hydroquad/config.hpp"

namespace hydroquad {

/// One resolved subcommand invocation: the effective config plus the path
/// and mode overrides from the command line. Fields a command does not use
/// are ignored. Unset optionals fall back to the config document.
struct CommandArgs {
    RunConfig cfg;
    std::string out_dir;
    std::string data_path;
    std::string model_path;
    std::string model_tag = "ef"; // "ef" or "lstm"
    std::optional<SimMode> mode;
};

/// Generates the synthetic force-log corpus and its manifest.
int cmd_synth(const CommandArgs& a);

/// Full training pipeline (load, filter, interpolate, window, split, fit);
/// writes the model, the training history and the quasi-steady baseline
/// comparison.
int cmd_train(const CommandArgs& a);

/// Test-split comparison of the learned model against the quasi-steady
/// baseline: per-speed error distributions plus ground-truth/prediction
/// time-series exports.
int cmd_compare(const CommandArgs& a);

/// Single swim simulation; writes the trajectory and a summary.
int cmd_simulate(const CommandArgs& a);

/// Gait search; writes the report, the ranked top gaits and their
/// re-simulated summaries.
int cmd_optimize(const CommandArgs& a);

} // namespace hydroquad

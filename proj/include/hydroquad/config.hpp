#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hydroquad/dynamics.hpp"
#include "hydroquad/gait.hpp"
#include "hydroquad/hydro.hpp"
#include "hydroquad/linkage.hpp"
#include "hydroquad/lstm.hpp"
#include "hydroquad/optimizer.hpp"
#include "hydroquad/synth.hpp"

namespace hydroquad {

/// Data-pipeline stages between the raw force logs and the training set.
struct PipelineConfig {
    double cutoff_hz = 6.0;
    bool interpolate = true;
    std::vector<double> interp_targets = {0.05, 0.15, 0.25};
    TrainConfig train;
};

/// Default input/output locations; command-line flags override these.
struct RunPaths {
    std::string data;
    std::string model;
    std::string out = "out";
};

/// The unified configuration document. Every command reads the sections it
/// needs; a config file overrides defaults field by field.
struct RunConfig {
    std::uint64_t seed = 0;
    LinkageGeometry linkage;
    EfParams ef;
    BodyConfig body;
    GaitParams gait;
    SynthGrid grid = SynthGrid::full_grid();
    NoiseSpec noise;
    PipelineConfig pipeline;
    OptConfig opt;
    RunPaths paths;
};

/// Parses a JSON config document. Angle-valued fields carry a _deg suffix
/// and are given in degrees. Unknown keys and out-of-range values are
/// rejected with the offending path (and the allowed bounds) in the
/// message. Missing sections and fields keep their defaults.
RunConfig parse_run_config(const std::string& text);

/// parse_run_config over a file's contents.
RunConfig load_run_config(const std::string& path);

/// Serializes a RunConfig to the same JSON schema parse_run_config reads
/// (round-trip stable). Used to embed the effective config in reports.
std::string run_config_json(const RunConfig& cfg);

} // namespace hydroquad

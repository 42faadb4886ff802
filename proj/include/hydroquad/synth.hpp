#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hydroquad/hydro.hpp"
#include "hydroquad/linkage.hpp"
#include "hydroquad/records.hpp"

namespace hydroquad {

/// Cartesian sweep of gait parameters and flow speeds for the synthetic
/// tunnel rig. Angles in radians. One group per (theta_H_min, theta_K_max,
/// freq, phi) cell; one RecordSet per (group, V_flow).
struct SynthGrid {
    std::vector<double> theta_H_min;
    std::vector<double> theta_K_max;
    std::vector<double> freq;
    std::vector<double> phi;
    std::vector<double> V_flow;
    double fs = 65.0;
    int cycles = 10;

    /// The complete sweep over the tested ranges: 4 hip minima, 4 knee
    /// maxima, 4 frequencies, 5 phase lags, 4 flow speeds.
    static SynthGrid full_grid();

    std::size_t cell_count() const {
        return theta_H_min.size() * theta_K_max.size() * freq.size() * phi.size();
    }
    std::size_t set_count() const { return cell_count() * V_flow.size(); }
};

/// Departures of the synthetic wrench from the quasi-steady model. The
/// oscillatory augmentation stands in for unsteady (vortex-shedding-like)
/// loads: per channel, amp * v_n(t)^2 * sin(2 pi k f t + phase) with k
/// alternating 2 and 3 across channels and fixed per-channel phases, so the
/// term is cycle-periodic and a deterministic function of the observable
/// kinematics. Gaussian noise is drawn per set from the derived seed.
struct NoiseSpec {
    double aug_amp_tau = 0.2;    // N*m per (m/s)^2
    double aug_amp_f = 0.6;      // N per (m/s)^2
    double noise_std_tau = 0.015; // N*m
    double noise_std_f = 0.05;    // N

    bool valid() const {
        return aug_amp_tau >= 0.0 && aug_amp_f >= 0.0 && noise_std_tau >= 0.0 &&
               noise_std_f >= 0.0;
    }
};

/// Generates one RecordSet per grid cell and flow speed: 10 cycles at fs,
/// wrench = quasi-steady prediction + oscillatory augmentation + noise.
/// Bit-identical for identical inputs and seed. Throws ConfigError when grid
/// values leave the tested ranges.
std::vector<RecordSet> synth_generate(const SynthGrid& grid, const NoiseSpec& noise,
                                      std::uint64_t seed,
                                      const LinkageGeometry& geom = {},
                                      const EfParams& ef = {});

/// key=value line recording the generator settings, stored in the log's
/// `# params=` comment.
std::string synth_meta(const NoiseSpec& noise, std::uint64_t seed);

} // namespace hydroquad

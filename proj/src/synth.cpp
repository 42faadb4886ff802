#include "hydroquad/synth.hpp"

#include <cmath>
#include <sstream>

#include "hydroquad/errors.hpp"
#include "hydroquad/rng.hpp"

namespace hydroquad {

namespace {

// Per-channel augmentation shape, channel order (tau_x, tau_y, tau_z, f_x,
// f_y, f_z): harmonic multiple of the paddle frequency, phase offset, and a
// relative amplitude factor. All nonzero so every channel carries structure
// the quasi-steady model lacks.
constexpr int kAugHarmonic[6] = {2, 3, 2, 3, 2, 3};
constexpr double kAugPhase[6] = {0.31, 1.27, 2.19, 3.41, 4.53, 5.62};
constexpr double kAugScale[6] = {1.0, 0.6, 0.8, 0.7, 1.0, 0.9};

void check_range(double v, double lo, double hi, const char* what) {
    if (!(v >= lo && v <= hi)) {
        std::ostringstream ss;
        ss << what << " = " << v << " outside tested range [" << lo << ", " << hi << "]";
        throw ConfigError(ss.str());
    }
}

} // namespace

SynthGrid SynthGrid::full_grid() {
    SynthGrid g;
    g.theta_H_min = {deg2rad(10.0), deg2rad(-10.0), deg2rad(-30.0), deg2rad(-50.0)};
    g.theta_K_max = {deg2rad(-20.0), deg2rad(-40.0), deg2rad(-60.0), deg2rad(-80.0)};
    g.freq = {0.3, 0.4, 0.5, 0.6};
    g.phi = {M_PI / 3.0, 2.0 * M_PI / 3.0, M_PI, 4.0 * M_PI / 3.0, 5.0 * M_PI / 3.0};
    g.V_flow = {0.0, 0.1, 0.2, 0.3};
    return g;
}

std::vector<RecordSet> synth_generate(const SynthGrid& grid, const NoiseSpec& noise,
                                      std::uint64_t seed, const LinkageGeometry& geom,
                                      const EfParams& ef) {
    if (!noise.valid()) throw ConfigError("noise amplitudes must be nonnegative");
    if (!geom.valid() || !ef.valid()) throw ConfigError("invalid geometry or force parameters");
    if (!(grid.fs > 0.0) || grid.cycles < 1) throw ConfigError("fs and cycles must be positive");
    if (grid.theta_H_min.empty() || grid.theta_K_max.empty() || grid.freq.empty() ||
        grid.phi.empty() || grid.V_flow.empty())
        throw ConfigError("empty grid dimension");
    for (double v : grid.theta_H_min)
        check_range(rad2deg(v), bounds::theta_H_min_lo_deg, bounds::theta_H_min_hi_deg,
                    "theta_H_min (deg)");
    for (double v : grid.theta_K_max)
        check_range(rad2deg(v), bounds::theta_K_max_lo_deg, bounds::theta_K_max_hi_deg,
                    "theta_K_max (deg)");
    for (double v : grid.freq) check_range(v, bounds::freq_grid_lo, bounds::freq_grid_hi, "freq");
    for (double v : grid.phi) check_range(v, 0.0, 2.0 * M_PI, "phi");
    for (double v : grid.V_flow) check_range(v, 0.0, 0.3, "V_flow");

    std::vector<RecordSet> out;
    out.reserve(grid.set_count());
    const double dt = 1.0 / grid.fs;
    int group = 0;
    int id = 0;
    for (double th_min : grid.theta_H_min)
        for (double tk_max : grid.theta_K_max)
            for (double f : grid.freq)
                for (double phi : grid.phi) {
                    GaitParams params;
                    params.theta_H_min = th_min;
                    params.theta_K_max = tk_max;
                    params.freq = f;
                    params.phi = phi;
                    params.alpha = {0.0, 0.0, 0.0, 0.0};

                    const int n =
                        static_cast<int>(std::lround(grid.cycles * grid.fs / f)) + 1;
                    const std::vector<WebState> webs =
                        web_state_series(geom, params, 0, 0.0, dt, n);

                    for (double V : grid.V_flow) {
                        RecordSet rs;
                        rs.id = id++;
                        rs.group = group;
                        rs.params = params;
                        rs.V_flow = V;
                        rs.fs = grid.fs;
                        rs.records.resize(static_cast<std::size_t>(n));

                        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(rs.id)));
                        FlowConditions flow;
                        flow.V_flow = V;
                        for (int i = 0; i < n; ++i) {
                            const double t = i * dt;
                            const JointState j = gait_angles(params, 0, t);
                            const EfForce force = ef_leg_force(ef, webs[static_cast<std::size_t>(i)], flow);

                            ForceRecord& r = rs.records[static_cast<std::size_t>(i)];
                            r.t = t;
                            r.V_flow = V;
                            r.theta_H = j.theta_H;
                            r.theta_K = j.theta_K;
                            r.dtheta_H = j.dtheta_H;
                            r.dtheta_K = j.dtheta_K;
                            r.wrench = force.wrench;

                            const double vn2 = force.v_n * force.v_n;
                            for (int c = 0; c < 6; ++c) {
                                const double amp =
                                    (c < 3 ? noise.aug_amp_tau : noise.aug_amp_f) * kAugScale[c];
                                const double aug =
                                    amp * vn2 *
                                    std::sin(2.0 * M_PI * kAugHarmonic[c] * f * t + kAugPhase[c]);
                                const double eps =
                                    rng.normal(0.0, c < 3 ? noise.noise_std_tau : noise.noise_std_f);
                                (c < 3 ? r.wrench.tau[c] : r.wrench.f[c - 3]) += aug + eps;
                            }
                        }
                        out.push_back(std::move(rs));
                    }
                    ++group;
                }
    return out;
}

std::string synth_meta(const NoiseSpec& noise, std::uint64_t seed) {
    std::ostringstream ss;
    ss << "aug_amp_tau=" << noise.aug_amp_tau << " aug_amp_f=" << noise.aug_amp_f
       << " noise_std_tau=" << noise.noise_std_tau << " noise_std_f=" << noise.noise_std_f
       << " harmonics=2,3 seed=" << seed;
    return ss.str();
}

} // namespace hydroquad

#include "hydroquad/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hydroquad/errors.hpp"

namespace hydroquad {

namespace {

constexpr double kPi = 3.14159265358979323846;

} // namespace

Eigen::VectorXd gait_gene_lower() {
    Eigen::VectorXd lo(kGaitGenes);
    lo << deg2rad(bounds::theta_H_min_lo_deg), deg2rad(bounds::theta_K_max_lo_deg),
        bounds::freq_opt_lo, 0.0, 0.0, 0.0, 0.0;
    return lo;
}

Eigen::VectorXd gait_gene_upper() {
    Eigen::VectorXd hi(kGaitGenes);
    hi << deg2rad(bounds::theta_H_min_hi_deg), deg2rad(bounds::theta_K_max_hi_deg),
        bounds::freq_opt_hi, 2.0 * kPi, 2.0 * kPi, 2.0 * kPi, 2.0 * kPi;
    return hi;
}

GaitParams gait_from_genes(const GaitParams& base, const Eigen::VectorXd& genes) {
    if (genes.size() != kGaitGenes) throw ConfigError("gait gene vector must have 7 entries");
    GaitParams g = base;
    g.theta_H_min = genes[0];
    g.theta_K_max = genes[1];
    g.freq = genes[2];
    for (int leg = 0; leg < 4; ++leg) g.alpha[leg] = genes[3 + leg];
    return g;
}

GaitParams sample_gait_uniform(const GaitParams& base, Rng& rng) {
    const Eigen::VectorXd lo = gait_gene_lower();
    const Eigen::VectorXd hi = gait_gene_upper();
    Eigen::VectorXd genes(kGaitGenes);
    for (int i = 0; i < kGaitGenes; ++i) genes[i] = lo[i] + (hi[i] - lo[i]) * rng.uniform();
    return gait_from_genes(base, genes);
}

Eigen::Vector3d evaluate_objectives(const Trajectory& traj, SimMode mode, double dt) {
    if (traj.states.empty()) throw ConfigError("trajectory has no states");
    const SimState& last = traj.states.back();
    Eigen::Vector3d f;
    if (mode == SimMode::straight) {
        double impulse_y = 0.0;
        for (const Wrench& w : traj.total_wrench) impulse_y += w.f.y();
        f[0] = -impulse_y * dt;
        f[1] = std::abs(last.theta_yaw);
    } else {
        double length = 0.0;
        for (std::size_t i = 1; i < traj.states.size(); ++i) {
            const double dx = traj.states[i].x - traj.states[i - 1].x;
            const double dy = traj.states[i].y - traj.states[i - 1].y;
            length += std::hypot(dx, dy);
        }
        f[0] = length;
        f[1] = std::abs(last.theta_yaw - 2.0 * kPi * turn_direction(traj));
    }
    f[2] = last.t;
    return f;
}

std::vector<ScoredGait> score_and_rank(const std::vector<Nsga2Individual>& candidates,
                                       const Eigen::Vector3d& weights, int k) {
    std::vector<ScoredGait> scored;
    scored.reserve(candidates.size());
    for (const Nsga2Individual& ind : candidates) {
        if (ind.objectives.size() != 3) throw ConfigError("scoring expects 3 objectives");
        ScoredGait s;
        s.genes = ind.genes;
        s.objectives = ind.objectives;
        s.S = weights.dot(ind.objectives);
        scored.push_back(std::move(s));
    }
    std::stable_sort(scored.begin(), scored.end(),
                     [](const ScoredGait& a, const ScoredGait& b) { return a.S < b.S; });
    if (k >= 0 && scored.size() > static_cast<std::size_t>(k)) scored.resize(k);
    return scored;
}

OptimizeResult optimize_gait(const GaitParams& base, const BodyConfig& body,
                             const LinkageGeometry& geom, const EfParams& ef,
                             const LstmModel* lstm, const OptConfig& cfg,
                             const GenerationCallback& on_generation) {
    if (!cfg.valid()) throw ConfigError("invalid optimizer configuration");
    if (!base.valid()) throw ConfigError("invalid base gait");
    if (!body.valid()) throw ConfigError("invalid body configuration");
    if (!ef.valid()) throw ConfigError("invalid hydrodynamic parameters");

    Nsga2Config ncfg;
    ncfg.population = cfg.population;
    ncfg.generations = cfg.generations;
    ncfg.crossover_prob = cfg.crossover_prob;
    ncfg.mutation_prob = cfg.mutation_prob;
    ncfg.sbx_eta = cfg.sbx_eta;
    ncfg.pm_eta = cfg.pm_eta;
    ncfg.seed = cfg.seed;

    const ObjectiveFn evaluate = [&](const Eigen::VectorXd& genes) -> Eigen::VectorXd {
        try {
            const GaitParams gait = gait_from_genes(base, genes);
            const Trajectory traj = simulate(gait, body, cfg.mode, geom, ef, lstm);
            return evaluate_objectives(traj, cfg.mode, body.dt);
        } catch (const std::exception&) {
            // unreachable linkage poses, diverged states: treat as infeasible
            return Eigen::Vector3d::Constant(std::numeric_limits<double>::infinity());
        }
    };

    OptimizeResult out;
    out.search = nsga2_run(gait_gene_lower(), gait_gene_upper(), 3, evaluate, ncfg,
                           on_generation);
    out.top = score_and_rank(out.search.archive, cfg.weights, cfg.retain_k);
    return out;
}

} // namespace hydroquad

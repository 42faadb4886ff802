#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "hydroquad/dynamics.hpp"
#include "hydroquad/nsga2.hpp"

namespace hydroquad {

/// Search settings for the gait optimization. The decision vector has 7
/// genes: theta_H_min, theta_K_max, freq and the four per-leg phase
/// offsets; the remaining gait fields come from the base GaitParams.
struct OptConfig {
    SimMode mode = SimMode::straight;
    int population = 100; // even
    int generations = 50;
    double crossover_prob = 0.9;
    double mutation_prob = 1.0 / 7.0;
    double sbx_eta = 15.0;
    double pm_eta = 20.0;
    std::uint64_t seed = 0;
    Eigen::Vector3d weights{1.0, 4.0, 2.0};
    int retain_k = 8;

    bool valid() const {
        return population >= 2 && population % 2 == 0 && generations >= 0 &&
               crossover_prob >= 0.0 && crossover_prob <= 1.0 && mutation_prob >= 0.0 &&
               mutation_prob <= 1.0 && sbx_eta > 0.0 && pm_eta > 0.0 && retain_k > 0 &&
               weights.allFinite();
    }
};

inline constexpr int kGaitGenes = 7;

/// Box bounds of the 7-gene decision vector (angles in radians, freq Hz,
/// phases in [0, 2 pi]).
Eigen::VectorXd gait_gene_lower();
Eigen::VectorXd gait_gene_upper();

/// Applies a gene vector onto a base gait (which supplies the fixed swing
/// endpoints and the hip-knee lag phi).
GaitParams gait_from_genes(const GaitParams& base, const Eigen::VectorXd& genes);

/// Uniform random gait within the optimization bounds, used for baselines.
GaitParams sample_gait_uniform(const GaitParams& base, Rng& rng);

/// Objectives to minimize, per mode. Straight: negated forward impulse of
/// the logged world-frame force, final yaw deviation from zero, final time.
/// Turn: path length, final yaw deviation from a full revolution in the
/// trajectory's own turn direction, final time.
Eigen::Vector3d evaluate_objectives(const Trajectory& traj, SimMode mode, double dt);

/// A candidate with its weighted score S = w1 f1 + w2 f2 + w3 f3.
struct ScoredGait {
    Eigen::VectorXd genes;
    Eigen::VectorXd objectives;
    double S = 0.0;
};

/// Ascending-S ranking over any evaluated set; returns the best k entries.
std::vector<ScoredGait> score_and_rank(const std::vector<Nsga2Individual>& candidates,
                                       const Eigen::Vector3d& weights, int k);

struct OptimizeResult {
    Nsga2Result search;
    std::vector<ScoredGait> top; // retain_k best by S over the whole archive
};

/// Full gait search: NSGA-II over the 7 genes, each candidate scored by one
/// simulation under the chosen force model; failed simulations become
/// infeasible candidates instead of aborting the run. The final ranking
/// draws on every candidate evaluated during the search.
OptimizeResult optimize_gait(const GaitParams& base, const BodyConfig& body,
                             const LinkageGeometry& geom, const EfParams& ef,
                             const LstmModel* lstm, const OptConfig& cfg,
                             const GenerationCallback& on_generation = nullptr);

} // namespace hydroquad

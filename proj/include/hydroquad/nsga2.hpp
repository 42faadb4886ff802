#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Core>

namespace hydroquad {

/// One member of the evolutionary population. Infeasible candidates carry
/// +infinity in every objective and sort behind all feasible ones.
struct Nsga2Individual {
    Eigen::VectorXd genes;
    Eigen::VectorXd objectives;
    int rank = -1;        // front index, 0 = nondominated
    double crowding = 0.0; // extended-real, boundary points get +infinity
};

struct Nsga2Config {
    int population = 100; // even
    int generations = 50;
    double crossover_prob = 0.9;
    double mutation_prob = -1.0; // < 0 means 1/genes
    double sbx_eta = 15.0;
    double pm_eta = 20.0;
    std::uint64_t seed = 0;
};

/// a dominates b: componentwise <= with at least one strict <.
bool dominates(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

/// Deb's fast nondominated sort. Returns fronts as index lists; every
/// individual lands in exactly one front.
std::vector<std::vector<int>> nondominated_sort(
    const std::vector<Eigen::VectorXd>& objectives);

/// Crowding distances for one front: per objective the extremes get
/// +infinity and interior points accumulate the neighbor gap over the
/// objective's range. Objectives with no finite positive range contribute
/// nothing.
std::vector<double> crowding_distance(const std::vector<Eigen::VectorXd>& front);

/// Maps genes to objectives. Must not throw; signal an infeasible candidate
/// by returning +infinity objectives.
using ObjectiveFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

/// Called after each generation with the generation index and the current
/// (ranked, crowded) population.
using GenerationCallback =
    std::function<void(int, const std::vector<Nsga2Individual>&)>;

struct Nsga2Result {
    std::vector<Nsga2Individual> population;      // final, ranked and crowded
    std::vector<std::vector<int>> fronts;         // fronts of the final population
    std::vector<Nsga2Individual> archive;         // every candidate ever evaluated
};

/// Standard generational NSGA-II over a box-bounded real genome: binary
/// tournament on (rank, crowding), simulated binary crossover, polynomial
/// mutation, elitist (mu + lambda) environmental selection. Deterministic
/// under cfg.seed.
Nsga2Result nsga2_run(const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                      int n_objectives, const ObjectiveFn& evaluate,
                      const Nsga2Config& cfg,
                      const GenerationCallback& on_generation = nullptr);

} // namespace hydroquad

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "hydroquad/errors.hpp"
#include "hydroquad/optimizer.hpp"
#include "hydroquad/rng.hpp"

using namespace hydroquad;

namespace {

constexpr double kPi = 3.14159265358979323846;

Eigen::VectorXd genes7(double a, double b, double c, double d, double e, double f, double g) {
    Eigen::VectorXd v(7);
    v << a, b, c, d, e, f, g;
    return v;
}

// Hand-built trajectory with one more state than wrench, as the integrator
// produces. All wrenches share the given force/torque.
Trajectory crafted_trajectory(const std::vector<SimState>& states, const Eigen::Vector3d& f,
                              const Eigen::Vector3d& tau, double gait_freq) {
    Trajectory traj;
    traj.states = states;
    traj.total_wrench.resize(states.size() - 1);
    for (Wrench& w : traj.total_wrench) {
        w.f = f;
        w.tau = tau;
    }
    traj.gait.freq = gait_freq;
    traj.model_tag = "ef";
    return traj;
}

SimState at(double t, double x, double y, double yaw) {
    SimState s;
    s.t = t;
    s.x = x;
    s.y = y;
    s.theta_yaw = yaw;
    return s;
}

// Elementwise equality that also holds for matching infinities, which a
// norm-of-difference comparison would turn into NaN.
bool same_vec(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    if (a.size() != b.size()) return false;
    for (int i = 0; i < a.size(); ++i)
        if (a[i] != b[i]) return false;
    return true;
}

} // namespace

TEST_CASE("gene box matches the documented gait ranges") {
    const Eigen::VectorXd lo = gait_gene_lower();
    const Eigen::VectorXd hi = gait_gene_upper();
    REQUIRE(lo.size() == kGaitGenes);
    REQUIRE(hi.size() == kGaitGenes);
    CHECK(lo[0] == deg2rad(-50.0));
    CHECK(hi[0] == deg2rad(10.0));
    CHECK(lo[1] == deg2rad(-80.0));
    CHECK(hi[1] == deg2rad(-20.0));
    CHECK(lo[2] == 0.2);
    CHECK(hi[2] == 0.65);
    for (int i = 3; i < 7; ++i) {
        CHECK(lo[i] == 0.0);
        CHECK(hi[i] == doctest::Approx(2.0 * kPi).epsilon(1e-15));
    }
    for (int i = 0; i < 7; ++i) CHECK(lo[i] < hi[i]);
}

TEST_CASE("gait_from_genes writes the free fields and keeps the fixed ones") {
    GaitParams base;
    base.theta_H_max = deg2rad(-95.0);
    base.theta_K_min = deg2rad(75.0);
    base.phi = 0.9;
    const Eigen::VectorXd g = genes7(deg2rad(-12.0), deg2rad(-33.0), 0.47, 0.1, 1.2, 2.3, 3.4);
    const GaitParams out = gait_from_genes(base, g);
    CHECK(out.theta_H_min == g[0]);
    CHECK(out.theta_K_max == g[1]);
    CHECK(out.freq == g[2]);
    for (int leg = 0; leg < 4; ++leg) CHECK(out.alpha[leg] == g[3 + leg]);
    CHECK(out.theta_H_max == base.theta_H_max);
    CHECK(out.theta_K_min == base.theta_K_min);
    CHECK(out.phi == base.phi);
}

TEST_CASE("gait_from_genes rejects a wrong-sized vector") {
    GaitParams base;
    Eigen::VectorXd six(6);
    six.setZero();
    CHECK_THROWS_AS(gait_from_genes(base, six), ConfigError);
    Eigen::VectorXd eight(8);
    eight.setZero();
    CHECK_THROWS_AS(gait_from_genes(base, eight), ConfigError);
}

TEST_CASE("sample_gait_uniform stays inside the gene box and actually varies") {
    GaitParams base;
    Rng rng(404);
    const Eigen::VectorXd lo = gait_gene_lower();
    const Eigen::VectorXd hi = gait_gene_upper();
    double first_freq = 0.0;
    bool varied = false;
    for (int i = 0; i < 200; ++i) {
        const GaitParams g = sample_gait_uniform(base, rng);
        CHECK(g.theta_H_min >= lo[0]);
        CHECK(g.theta_H_min <= hi[0]);
        CHECK(g.theta_K_max >= lo[1]);
        CHECK(g.theta_K_max <= hi[1]);
        CHECK(g.freq >= lo[2]);
        CHECK(g.freq <= hi[2]);
        for (int leg = 0; leg < 4; ++leg) {
            CHECK(g.alpha[leg] >= 0.0);
            CHECK(g.alpha[leg] <= 2.0 * kPi);
        }
        CHECK(g.theta_H_max == base.theta_H_max);
        if (i == 0)
            first_freq = g.freq;
        else if (g.freq != first_freq)
            varied = true;
    }
    CHECK(varied);
}

TEST_CASE("straight objectives: zero force and zero yaw give (0, 0, t_final)") {
    const Trajectory traj = crafted_trajectory(
        {at(0.0, 0, 0, 0), at(2.5, 0, 0, 0), at(5.0, 0, 0, 0)}, Eigen::Vector3d::Zero(),
        Eigen::Vector3d::Zero(), 0.5);
    const Eigen::Vector3d f = evaluate_objectives(traj, SimMode::straight, 0.125);
    CHECK(f[0] == 0.0);
    CHECK(f[1] == 0.0);
    CHECK(f[2] == 5.0);
}

TEST_CASE("straight objectives: forward impulse is minus the summed f_y times dt") {
    // 100 unit forward forces at dt = 0.125 (dyadic, so the sum and the
    // product are both exact): impulse 12.5 N s, objective -12.5.
    std::vector<SimState> states(101);
    for (int i = 0; i <= 100; ++i) states[i] = at(0.125 * i, 0, 0, 0);
    states.back().theta_yaw = -0.4;
    const Trajectory traj =
        crafted_trajectory(states, Eigen::Vector3d{0.0, 1.0, 0.0}, Eigen::Vector3d::Zero(), 0.5);
    const Eigen::Vector3d f = evaluate_objectives(traj, SimMode::straight, 0.125);
    CHECK(f[0] == -12.5);
    CHECK(f[1] == 0.4); // yaw deviation is an absolute value
    CHECK(f[2] == 12.5);
}

TEST_CASE("turn objectives: path length, yaw shortfall against the turn direction") {
    // Path (0,0) -> (3,0) -> (3,4): exact length 7. Positive net yaw torque
    // inside the first paddle cycle makes the target +2 pi.
    std::vector<SimState> states = {at(0.0, 0, 0, 0), at(1.0, 3, 0, 0),
                                    at(2.0, 3, 4, 2.0 * kPi - 0.25)};
    Trajectory traj = crafted_trajectory(states, Eigen::Vector3d::Zero(),
                                         Eigen::Vector3d{0.0, 0.0, 0.3}, 0.5);
    REQUIRE(turn_direction(traj) == 1);
    Eigen::Vector3d f = evaluate_objectives(traj, SimMode::turn, 1.0);
    CHECK(f[0] == 7.0);
    CHECK(f[1] == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(f[2] == 2.0);

    // Mirror case: negative torque flips the target to -2 pi.
    states.back().theta_yaw = -2.0 * kPi + 0.1;
    traj = crafted_trajectory(states, Eigen::Vector3d::Zero(), Eigen::Vector3d{0.0, 0.0, -0.3},
                              0.5);
    REQUIRE(turn_direction(traj) == -1);
    f = evaluate_objectives(traj, SimMode::turn, 1.0);
    CHECK(f[1] == doctest::Approx(0.1).epsilon(1e-12));
}

TEST_CASE("objectives reject an empty trajectory") {
    Trajectory traj;
    CHECK_THROWS_AS(evaluate_objectives(traj, SimMode::straight, 0.1), ConfigError);
}

TEST_CASE("score_and_rank applies the weights and sorts ascending") {
    std::vector<Nsga2Individual> pop(3);
    for (Nsga2Individual& ind : pop) ind.genes = Eigen::VectorXd::Zero(7);
    pop[0].objectives = Eigen::Vector3d{1.0, 1.0, 1.0}; // S = 1 + 4 + 2 = 7
    pop[1].objectives = Eigen::Vector3d{0.0, 0.0, 0.0}; // S = 0
    pop[2].objectives = Eigen::Vector3d{2.0, 0.5, 0.0}; // S = 4
    const Eigen::Vector3d w{1.0, 4.0, 2.0};
    const std::vector<ScoredGait> top = score_and_rank(pop, w, 8);
    REQUIRE(top.size() == 3);
    CHECK(top[0].S == 0.0);
    CHECK(top[1].S == 4.0);
    CHECK(top[2].S == 7.0);
    CHECK(same_vec(top[2].objectives, Eigen::Vector3d{1.0, 1.0, 1.0}));
}

TEST_CASE("score_and_rank top-k matches a full-sort oracle") {
    Rng rng(77);
    std::vector<Nsga2Individual> pop(40);
    for (int i = 0; i < 40; ++i) {
        pop[i].genes = Eigen::VectorXd::Constant(7, static_cast<double>(i));
        pop[i].objectives = Eigen::Vector3d{rng.uniform(), rng.uniform(), rng.uniform()};
    }
    const Eigen::Vector3d w{1.0, 4.0, 2.0};

    std::vector<std::pair<double, int>> oracle;
    for (int i = 0; i < 40; ++i) oracle.emplace_back(w.dot(pop[i].objectives), i);
    std::stable_sort(oracle.begin(), oracle.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });

    const std::vector<ScoredGait> top = score_and_rank(pop, w, 8);
    REQUIRE(top.size() == 8);
    for (int k = 0; k < 8; ++k) {
        CHECK(top[k].S == oracle[k].first);
        CHECK(top[k].genes[0] == static_cast<double>(oracle[k].second));
    }
    for (int k = 1; k < 8; ++k) CHECK(top[k - 1].S <= top[k].S);

    // k beyond the candidate count returns everything, still sorted.
    const std::vector<ScoredGait> all = score_and_rank(pop, w, 100);
    CHECK(all.size() == 40);
}

TEST_CASE("score_and_rank keeps input order between equal scores") {
    std::vector<Nsga2Individual> pop(2);
    pop[0].genes = Eigen::VectorXd::Constant(7, 1.0);
    pop[1].genes = Eigen::VectorXd::Constant(7, 2.0);
    pop[0].objectives = Eigen::Vector3d{1.0, 0.0, 0.0};
    pop[1].objectives = Eigen::Vector3d{0.0, 0.25, 0.0}; // same S = 1 under w = (1, 4, 2)
    const std::vector<ScoredGait> top = score_and_rank(pop, Eigen::Vector3d{1.0, 4.0, 2.0}, 2);
    CHECK(top[0].genes[0] == 1.0);
    CHECK(top[1].genes[0] == 2.0);
}

TEST_CASE("score_and_rank rejects malformed objectives") {
    std::vector<Nsga2Individual> pop(1);
    pop[0].genes = Eigen::VectorXd::Zero(7);
    pop[0].objectives = Eigen::VectorXd::Zero(2);
    CHECK_THROWS_AS(score_and_rank(pop, Eigen::Vector3d::Ones(), 1), ConfigError);
}

TEST_CASE("ranking order is invariant under positive weight scaling") {
    Rng rng(31);
    std::vector<Nsga2Individual> pop(25);
    for (int i = 0; i < 25; ++i) {
        pop[i].genes = Eigen::VectorXd::Constant(7, static_cast<double>(i));
        pop[i].objectives = Eigen::Vector3d{rng.uniform(), rng.uniform(), rng.uniform()};
    }
    const auto a = score_and_rank(pop, Eigen::Vector3d{1.0, 4.0, 2.0}, 25);
    const auto b = score_and_rank(pop, Eigen::Vector3d{2.0, 8.0, 4.0}, 25);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].genes[0] == b[i].genes[0]);
}

TEST_CASE("small gait search runs end to end under the empirical force model") {
    GaitParams base;
    BodyConfig body;
    body.t_max = 20.0; // keep the smoke test quick
    LinkageGeometry geom;
    EfParams ef;

    OptConfig cfg;
    cfg.mode = SimMode::straight;
    cfg.population = 4;
    cfg.generations = 1;
    cfg.seed = 12;
    cfg.retain_k = 3;

    const OptimizeResult res = optimize_gait(base, body, geom, ef, nullptr, cfg);
    CHECK(res.search.population.size() == 4);
    CHECK(res.search.archive.size() == 8); // founders + one offspring block
    REQUIRE(res.top.size() <= 3);
    REQUIRE(!res.top.empty());
    const Eigen::VectorXd lo = gait_gene_lower();
    const Eigen::VectorXd hi = gait_gene_upper();
    for (std::size_t i = 0; i < res.top.size(); ++i) {
        const ScoredGait& s = res.top[i];
        REQUIRE(s.genes.size() == kGaitGenes);
        for (int g = 0; g < kGaitGenes; ++g) {
            CHECK(s.genes[g] >= lo[g]);
            CHECK(s.genes[g] <= hi[g]);
        }
        CHECK(s.S == cfg.weights.dot(s.objectives));
        if (i > 0) CHECK(res.top[i - 1].S <= s.S);
    }
    // the best candidate of even a small search should produce net thrust
    CHECK(res.top[0].objectives[0] < 0.0);

    const OptimizeResult rerun = optimize_gait(base, body, geom, ef, nullptr, cfg);
    REQUIRE(rerun.search.archive.size() == res.search.archive.size());
    for (std::size_t i = 0; i < res.search.archive.size(); ++i) {
        CHECK(same_vec(rerun.search.archive[i].genes, res.search.archive[i].genes));
        CHECK(same_vec(rerun.search.archive[i].objectives, res.search.archive[i].objectives));
    }
    CHECK(rerun.top[0].S == res.top[0].S);
}

TEST_CASE("gait search validates its configuration") {
    GaitParams base;
    BodyConfig body;
    LinkageGeometry geom;
    EfParams ef;
    OptConfig cfg;
    cfg.population = 5; // odd
    CHECK_THROWS_AS(optimize_gait(base, body, geom, ef, nullptr, cfg), ConfigError);
    cfg.population = 4;
    cfg.retain_k = 0;
    CHECK_THROWS_AS(optimize_gait(base, body, geom, ef, nullptr, cfg), ConfigError);
}

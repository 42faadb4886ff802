#pragma once

#include <array>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "hydroquad/gait.hpp"
#include "hydroquad/hydro.hpp"
#include "hydroquad/linkage.hpp"
#include "hydroquad/lstm.hpp"
#include "hydroquad/wrench.hpp"

namespace hydroquad {

/// Rigid-body and integration settings. The body frame has x lateral
/// (starboard positive), y forward, z up; yaw is the only rotational degree
/// of freedom. Mounts and hip-abduction axes are per leg in LF, RF, LH, RH
/// order; each axis must be a unit vector with zero y-component.
struct BodyConfig {
    double mass = 2.5;   // kg
    double I_yaw = 0.05; // kg*m^2
    std::array<Eigen::Vector3d, 4> leg_mounts = {
        Eigen::Vector3d{-0.1, 0.12, 0.0}, Eigen::Vector3d{0.1, 0.12, 0.0},
        Eigen::Vector3d{-0.1, -0.12, 0.0}, Eigen::Vector3d{0.1, -0.12, 0.0}};
    std::array<Eigen::Vector3d, 4> haa_axes = {
        Eigen::Vector3d{1.0, 0.0, 0.0}, Eigen::Vector3d{1.0, 0.0, 0.0},
        Eigen::Vector3d{1.0, 0.0, 0.0}, Eigen::Vector3d{1.0, 0.0, 0.0}};
    std::array<double, 4> haa_angles = {deg2rad(30.0), deg2rad(30.0), 0.0, 0.0};
    double dt = 1.0 / 65.0;
    double t_max = 60.0;
    double finish_distance = 2.0;

    bool valid() const;
};

/// Planar body state in the world frame.
struct SimState {
    double x = 0.0;
    double y = 0.0;
    double vx = 0.0;
    double vy = 0.0;
    double theta_yaw = 0.0;
    double dtheta_yaw = 0.0;
    double t = 0.0;

    bool all_finite() const;
};

enum class SimMode { straight, turn };

/// Integration record: states[i] is the state before step i, so there is
/// one more state than logged wrench. total_wrench[i] is the total applied
/// wrench during step i, expressed in the world frame.
struct Trajectory {
    std::vector<SimState> states;
    std::vector<Wrench> total_wrench;
    GaitParams gait;
    std::string model_tag; // "ef" or "lstm"
};

/// Rotation by `angle` about the unit axis, in the Rodrigues form
/// I + sin(angle) K + (1 - cos(angle)) K^2. angle = 0 returns the input
/// unchanged, bit for bit.
Wrench rotate_leg_wrench(const Wrench& leg, const Eigen::Vector3d& axis, double angle);

/// Transports a leg wrench to the metacenter: force rotated by the hip
/// abduction, torque rotated likewise plus the mount-arm cross term.
Wrench metacenter_wrench(const Wrench& leg, const Eigen::Vector3d& mount,
                         const Eigen::Vector3d& axis, double angle);

/// Sum of the four metacenter wrenches plus body drag opposing the
/// body-frame velocity (no drag torque). Result is in the body frame.
Wrench total_wrench(const std::array<Wrench, 4>& legs, double vx_body, double vy_body);

/// One explicit Euler step: yaw from tau_z / I_yaw, translation from the
/// body-frame force rotated by the current yaw; positions advance with the
/// pre-update velocities. Throws NonFiniteState if the result diverges.
SimState step(const SimState& s, const Wrench& body_wrench, const BodyConfig& cfg);

/// Integrates a full swim. Per step each leg's joint state comes from the
/// gait law with that leg's phase offset; the leg wrench comes from the
/// quasi-steady model (lstm == nullptr) or from the learned model fed a
/// rolling 16-row window per leg, warm-started by repeating the initial
/// row. The flow-speed input of either model is the body-frame forward
/// speed. Terminates on the finish distance (straight), on |yaw| reaching
/// 2 pi (turn), or at t_max.
Trajectory simulate(const GaitParams& gait, const BodyConfig& body, SimMode mode,
                    const LinkageGeometry& geom, const EfParams& ef,
                    const LstmModel* lstm = nullptr);

/// Turn sense of a trajectory: sign of the net yaw torque over the first
/// gait cycle (+1 counterclockwise, -1 clockwise).
int turn_direction(const Trajectory& traj);

/// Algebraic (Kasa) least-squares circle through the planar path.
/// Degenerate paths (fewer than 3 points or collinear to machine
/// precision) yield r = 0.
struct CircleFit {
    double cx = 0.0;
    double cy = 0.0;
    double r = 0.0;
};
CircleFit fit_circle(const std::vector<Eigen::Vector2d>& pts);

/// Mean absolute lateral deviation sampled where the path first crosses
/// each station y = 0, spacing, 2*spacing, ... up to max_y; stations the
/// path never reaches are not counted.
struct StationStats {
    double mae_x = 0.0;
    int stations = 0;
};
StationStats lateral_mae(const Trajectory& traj, double spacing, double max_y);

/// One row per integration step: t, x, y, vx, vy, theta_yaw, dtheta_yaw and
/// the six world-frame wrench components applied during that step.
void save_trajectory_csv(const Trajectory& traj, const std::string& path);

} // namespace hydroquad

#pragma once

#include <vector>

#include <Eigen/Core>

#include "hydroquad/gait.hpp"

namespace hydroquad {

/// Four-bar geometry of one leg plus the paddling web bolted to the calf.
struct LinkageGeometry {
    double len_OA = 0.035;      // m, |OA| = |BC|
    double len_OC = 0.125;      // m, |OC| = |AB|
    double len_BQ_ratio = 2.5;  // |BQ| = ratio * |BC|
    double web_side = 0.06;     // m
    double web_mass = 0.010;    // kg

    bool valid() const {
        return len_OA > 0.0 && len_OC > 0.0 && len_BQ_ratio > 0.0 &&
               web_side > 0.0 && web_mass > 0.0;
    }
};

/// Resolved sagittal-plane positions of the linkage joints and the web
/// midpoint Q. Coordinates are in the leg's sagittal X-Y plane with the hip
/// pivot O at the origin.
struct LinkagePose {
    Eigen::Vector2d A, B, C, Q;
    double web_angle = 0.0; // direction of the C->B ray, rad from +X
};

/// Web midpoint kinematics over time; velocities and accelerations come from
/// central finite differences at the sampling step.
struct WebState {
    Eigen::Vector2d Q_pos = Eigen::Vector2d::Zero();
    Eigen::Vector2d Q_vel = Eigen::Vector2d::Zero();
    Eigen::Vector2d Q_acc = Eigen::Vector2d::Zero();
    double web_angle = 0.0;
    double t = 0.0;
};

/// Resolves the four-bar to joint positions.
///
/// Convention (single source of truth, shared with the test oracle):
///   - O is the origin of the sagittal X-Y plane.
///   - A = len_OA * (cos theta_H, sin theta_H); theta_H measured from +X.
///   - C = len_OC * (cos theta_K, sin theta_K); theta_K measured from +X.
///   - B is the intersection of circle(A, len_OC) and circle(C, len_OA) on
///     the parallelogram side of the A-C chord, i.e. the side containing
///     A + C. For the exact parallelogram geometry (|OA| = |BC|,
///     |OC| = |AB|) this intersecting point is B = A + C and the branch is
///     continuous over the whole joint range; the mechanism never snaps to
///     the crossed (anti-parallelogram) assembly.
///   - Q = B + len_BQ_ratio * (B - C), on the calf ray distal to the knee.
///
/// Throws LinkageInfeasible when the circles cannot intersect (only possible
/// for non-parallelogram custom geometry) or the configuration is degenerate.
LinkagePose solve_linkage(const LinkageGeometry& geom, const JointState& j);

/// Chains gait_angles + solve_linkage over n uniform samples starting at t0.
/// Q_vel by central differences, Q_acc by second central differences;
/// endpoints use one-sided differences of the same order in the interior
/// stencil sense.
std::vector<WebState> web_state_series(const LinkageGeometry& geom,
                                       const GaitParams& g, int leg_index,
                                       double t0, double dt, int n);

/// As above but over an explicit sequence of joint states sampled at dt
/// (used when replaying logged joint angles rather than the analytic law).
std::vector<WebState> web_state_series(const LinkageGeometry& geom,
                                       const std::vector<JointState>& joints,
                                       double dt);

} // namespace hydroquad

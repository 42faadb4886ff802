#include "hydroquad/linkage.hpp"

#include <cmath>
#include <string>

#include "hydroquad/errors.hpp"

namespace hydroquad {

namespace {

double cross2(const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
    return a.x() * b.y() - a.y() * b.x();
}

} // namespace

LinkagePose solve_linkage(const LinkageGeometry& geom, const JointState& j) {
    const Eigen::Vector2d A =
        geom.len_OA * Eigen::Vector2d(std::cos(j.theta_H), std::sin(j.theta_H));
    const Eigen::Vector2d C =
        geom.len_OC * Eigen::Vector2d(std::cos(j.theta_K), std::sin(j.theta_K));

    const double r_a = geom.len_OC; // |AB|
    const double r_c = geom.len_OA; // |CB|

    const Eigen::Vector2d ac = C - A;
    const double d = ac.norm();
    if (d < 1e-12) {
        throw LinkageInfeasible("linkage degenerate: points A and C coincide at t=" +
                                std::to_string(j.t));
    }
    if (d > r_a + r_c + 1e-12 || d < std::abs(r_a - r_c) - 1e-12) {
        throw LinkageInfeasible("linkage circles do not intersect at t=" +
                                std::to_string(j.t));
    }

    const Eigen::Vector2d u = ac / d;
    const double along = (r_a * r_a - r_c * r_c + d * d) / (2.0 * d);
    const double h_sq = r_a * r_a - along * along;
    const double h = h_sq > 0.0 ? std::sqrt(h_sq) : 0.0;

    // Assembly branch: the side of the A-C chord containing the parallelogram
    // completion A + C. (A + C) - A = C, so the side is sign(cross(u, C)).
    const double side = cross2(u, C) >= 0.0 ? 1.0 : -1.0;
    const Eigen::Vector2d perp(-u.y(), u.x());

    LinkagePose pose;
    pose.A = A;
    pose.C = C;
    pose.B = A + along * u + side * h * perp;
    pose.Q = pose.B + geom.len_BQ_ratio * (pose.B - pose.C);
    const Eigen::Vector2d cb = pose.B - pose.C;
    pose.web_angle = std::atan2(cb.y(), cb.x());
    return pose;
}

std::vector<WebState> web_state_series(const LinkageGeometry& geom,
                                       const GaitParams& g, int leg_index,
                                       double t0, double dt, int n) {
    std::vector<JointState> joints;
    joints.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        joints.push_back(gait_angles(g, leg_index, t0 + i * dt));
    }
    return web_state_series(geom, joints, dt);
}

std::vector<WebState> web_state_series(const LinkageGeometry& geom,
                                       const std::vector<JointState>& joints,
                                       double dt) {
    if (dt <= 0.0) {
        throw InsufficientLength("web_state_series: dt must be positive");
    }
    const std::size_t n = joints.size();
    std::vector<LinkagePose> poses;
    poses.reserve(n);
    for (const JointState& j : joints) {
        poses.push_back(solve_linkage(geom, j));
    }

    std::vector<WebState> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        out[i].t = joints[i].t;
        out[i].Q_pos = poses[i].Q;
        out[i].web_angle = poses[i].web_angle;
    }
    if (n == 1) {
        return out; // single sample: no differences available, rates stay zero
    }

    const double inv_2dt = 1.0 / (2.0 * dt);
    const double inv_dt2 = 1.0 / (dt * dt);
    for (std::size_t i = 0; i < n; ++i) {
        if (i == 0) {
            out[i].Q_vel = (poses[1].Q - poses[0].Q) / dt;
            if (n >= 3) {
                out[i].Q_acc = (poses[2].Q - 2.0 * poses[1].Q + poses[0].Q) * inv_dt2;
            }
        } else if (i == n - 1) {
            out[i].Q_vel = (poses[n - 1].Q - poses[n - 2].Q) / dt;
            if (n >= 3) {
                out[i].Q_acc =
                    (poses[n - 1].Q - 2.0 * poses[n - 2].Q + poses[n - 3].Q) * inv_dt2;
            }
        } else {
            out[i].Q_vel = (poses[i + 1].Q - poses[i - 1].Q) * inv_2dt;
            out[i].Q_acc =
                (poses[i + 1].Q - 2.0 * poses[i].Q + poses[i - 1].Q) * inv_dt2;
        }
    }
    return out;
}

} // namespace hydroquad

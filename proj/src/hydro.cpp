#include "hydroquad/hydro.hpp"

#include <cmath>

#include "hydroquad/errors.hpp"

namespace hydroquad {

namespace {

double cross2(const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
    return a.x() * b.y() - a.y() * b.x();
}

// Cubic smoothstep on [0, 1], clamped outside.
double smoothstep01(double u) {
    if (u <= 0.0) return 0.0;
    if (u >= 1.0) return 1.0;
    return u * u * (3.0 - 2.0 * u);
}

} // namespace

EfForce ef_leg_force(const EfParams& p, const WebState& w, const FlowConditions& flow) {
    // Web normal: the web plane contains the C->B direction, so the normal is
    // that direction rotated +90 degrees.
    const Eigen::Vector2d n{-std::sin(w.web_angle), std::cos(w.web_angle)};

    const Eigen::Vector2d v_rel = flow.V_flow * flow.direction - w.Q_vel;
    const double v_n = n.dot(v_rel);
    const double a_n = n.dot(w.Q_acc);

    EfForce out;
    out.v_n = v_n;
    out.F_A = 2.0 * M_PI * p.rho_water * p.a * p.a * p.a * a_n;
    out.F_D = 0.5 * p.rho_water * p.ref_area() * p.C_R * std::abs(v_n) * v_n;
    out.F_I = p.m_web * a_n;
    out.F_T = out.F_A + out.F_D + out.F_I;

    const Eigen::Vector2d f2 = out.F_T * n;
    out.wrench.f = Eigen::Vector3d{0.0, f2.x(), f2.y()};
    out.wrench.tau = Eigen::Vector3d{cross2(w.Q_pos, f2), 0.0, 0.0};
    return out;
}

double forward_drag_magnitude(double speed) {
    const double v = std::abs(speed);
    return 9.997 * v * v - 0.132 * v + 0.334;
}

double lateral_drag_magnitude(double speed) {
    const double v = std::abs(speed);
    return 15.571 * v * v + 0.937 * v + 0.055;
}

Eigen::Vector2d body_drag(double v_x, double v_y) {
    const double tx = smoothstep01(std::abs(v_x) / kRestTaperSpeed);
    const double ty = smoothstep01(std::abs(v_y) / kRestTaperSpeed);
    const double fx = -std::copysign(lateral_drag_magnitude(v_x) * tx, v_x);
    const double fy = -std::copysign(forward_drag_magnitude(v_y) * ty, v_y);
    return {fx, fy};
}

Vector6d ef_window_prediction(const LinkageGeometry& geom, const EfParams& p,
                              const Eigen::MatrixXd& window, double fs,
                              const Eigen::Vector2d& flow_direction) {
    const Eigen::Index n = window.rows();
    if (n < 4)
        throw InsufficientLength("ef_window_prediction: need at least 4 window rows");
    if (window.cols() != 5) throw SchemaError("ef_window_prediction: expected 5 columns");
    if (!(fs > 0.0)) throw SamplingError("ef_window_prediction: fs must be positive");

    // Poses of the last 4 rows; only the window's own past is used, so the
    // rates come from backward differences rather than the centered ones a
    // whole-log replay can afford.
    Eigen::Vector2d q[4];
    double web_angle = 0.0;
    for (int k = 0; k < 4; ++k) {
        JointState j;
        j.theta_H = window(n - 4 + k, 1);
        j.theta_K = window(n - 4 + k, 2);
        const LinkagePose pose = solve_linkage(geom, j);
        q[k] = pose.Q;
        web_angle = pose.web_angle;
    }
    const double dt = 1.0 / fs;
    WebState w;
    w.Q_pos = q[3];
    w.Q_vel = (3.0 * q[3] - 4.0 * q[2] + q[1]) / (2.0 * dt);
    w.Q_acc = (2.0 * q[3] - 5.0 * q[2] + 4.0 * q[1] - q[0]) / (dt * dt);
    w.web_angle = web_angle;

    FlowConditions flow;
    flow.V_flow = window(n - 1, 0);
    flow.direction = flow_direction;
    return wrench_to_vec(ef_leg_force(p, w, flow).wrench);
}

std::vector<Wrench> ef_wrench_series(const LinkageGeometry& geom, const EfParams& p,
                                     const std::vector<JointState>& joints,
                                     const std::vector<double>& V_flow, double dt,
                                     const Eigen::Vector2d& flow_direction) {
    if (joints.size() != V_flow.size())
        throw SchemaError("ef_wrench_series: joint and flow series lengths differ");
    const std::vector<WebState> webs = web_state_series(geom, joints, dt);

    std::vector<Wrench> out(webs.size());
    FlowConditions flow;
    flow.direction = flow_direction;
    for (std::size_t i = 0; i < webs.size(); ++i) {
        flow.V_flow = V_flow[i];
        out[i] = ef_leg_force(p, webs[i], flow).wrench;
    }
    return out;
}

} // namespace hydroquad

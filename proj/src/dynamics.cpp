#include "hydroquad/dynamics.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <Eigen/Dense>

#include "hydroquad/errors.hpp"

namespace hydroquad {

namespace {

void check_axis(const Eigen::Vector3d& axis) {
    if (std::abs(axis.norm() - 1.0) > 1e-9)
        throw AxisNotUnit("rotation axis must have unit length");
}

Eigen::Matrix3d rodrigues(const Eigen::Vector3d& axis, double angle) {
    Eigen::Matrix3d K;
    K << 0.0, -axis.z(), axis.y(), axis.z(), 0.0, -axis.x(), -axis.y(), axis.x(), 0.0;
    return Eigen::Matrix3d::Identity() + std::sin(angle) * K +
           (1.0 - std::cos(angle)) * (K * K);
}

// Body-frame forward speed, the flow-speed input of both force models.
double forward_speed(const SimState& s) {
    return -std::sin(s.theta_yaw) * s.vx + std::cos(s.theta_yaw) * s.vy;
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace

bool BodyConfig::valid() const {
    if (!(mass > 0.0 && I_yaw > 0.0 && dt > 0.0 && t_max > 0.0 && finish_distance > 0.0))
        return false;
    for (const Eigen::Vector3d& axis : haa_axes)
        if (std::abs(axis.norm() - 1.0) > 1e-9 || std::abs(axis.y()) > 1e-12) return false;
    for (const Eigen::Vector3d& p : leg_mounts)
        if (!p.allFinite()) return false;
    for (double a : haa_angles)
        if (!std::isfinite(a)) return false;
    return true;
}

bool SimState::all_finite() const {
    return std::isfinite(x) && std::isfinite(y) && std::isfinite(vx) && std::isfinite(vy) &&
           std::isfinite(theta_yaw) && std::isfinite(dtheta_yaw) && std::isfinite(t);
}

Wrench rotate_leg_wrench(const Wrench& leg, const Eigen::Vector3d& axis, double angle) {
    check_axis(axis);
    if (angle == 0.0) return leg;
    const Eigen::Matrix3d R = rodrigues(axis, angle);
    return {R * leg.f, R * leg.tau};
}

Wrench metacenter_wrench(const Wrench& leg, const Eigen::Vector3d& mount,
                         const Eigen::Vector3d& axis, double angle) {
    const Wrench rotated = rotate_leg_wrench(leg, axis, angle);
    return {rotated.f, mount.cross(rotated.f) + rotated.tau};
}

Wrench total_wrench(const std::array<Wrench, 4>& legs, double vx_body, double vy_body) {
    Wrench out;
    for (const Wrench& w : legs) out += w;
    const Eigen::Vector2d drag = body_drag(vx_body, vy_body);
    out.f.x() += drag.x();
    out.f.y() += drag.y();
    return out;
}

SimState step(const SimState& s, const Wrench& body_wrench, const BodyConfig& cfg) {
    const double c = std::cos(s.theta_yaw);
    const double sn = std::sin(s.theta_yaw);
    const double fx_world = c * body_wrench.f.x() - sn * body_wrench.f.y();
    const double fy_world = sn * body_wrench.f.x() + c * body_wrench.f.y();

    SimState n;
    n.x = s.x + s.vx * cfg.dt;
    n.y = s.y + s.vy * cfg.dt;
    n.theta_yaw = s.theta_yaw + s.dtheta_yaw * cfg.dt;
    n.vx = s.vx + (fx_world / cfg.mass) * cfg.dt;
    n.vy = s.vy + (fy_world / cfg.mass) * cfg.dt;
    n.dtheta_yaw = s.dtheta_yaw + (body_wrench.tau.z() / cfg.I_yaw) * cfg.dt;
    n.t = s.t + cfg.dt;
    if (!n.all_finite()) throw NonFiniteState("integration diverged at t=" + fmt(s.t));
    return n;
}

namespace {

// Quasi-steady leg wrench at time t: the web rates come from a centered
// difference of the analytically known poses one step either side.
Wrench ef_leg_wrench_at(const LinkageGeometry& geom, const EfParams& ef,
                        const GaitParams& gait, int leg, double t, double dt,
                        double v_forward) {
    const LinkagePose prev = solve_linkage(geom, gait_angles(gait, leg, t - dt));
    const LinkagePose cur = solve_linkage(geom, gait_angles(gait, leg, t));
    const LinkagePose next = solve_linkage(geom, gait_angles(gait, leg, t + dt));

    WebState w;
    w.Q_pos = cur.Q;
    w.Q_vel = (next.Q - prev.Q) / (2.0 * dt);
    w.Q_acc = (next.Q - 2.0 * cur.Q + prev.Q) / (dt * dt);
    w.web_angle = cur.web_angle;
    w.t = t;

    FlowConditions flow;
    flow.V_flow = v_forward;
    return ef_leg_force(ef, w, flow).wrench;
}

// Rolling per-leg input windows for the learned model, all four legs
// predicted as one batch.
struct LstmLegDriver {
    const LstmModel* model;
    std::array<Eigen::MatrixXd, 4> windows;
    bool primed = false;

    explicit LstmLegDriver(const LstmModel* m) : model(m) {
        for (auto& w : windows) w.resize(kWindowLen, kInputDim);
    }

    void push_rows(const GaitParams& gait, double t, double v_forward) {
        for (int leg = 0; leg < 4; ++leg) {
            const JointState j = gait_angles(gait, leg, t);
            Eigen::RowVectorXd row(kInputDim);
            row << v_forward, j.theta_H, j.theta_K, j.dtheta_H, j.dtheta_K;
            if (!primed) {
                windows[leg] = row.replicate(kWindowLen, 1);
            } else {
                const Eigen::MatrixXd shifted = windows[leg].bottomRows(kWindowLen - 1);
                windows[leg].topRows(kWindowLen - 1) = shifted;
                windows[leg].row(kWindowLen - 1) = row;
            }
        }
        primed = true;
    }

    std::array<Wrench, 4> predict() const {
        Batch batch;
        batch.x.assign(kWindowLen, Eigen::MatrixXd(kInputDim, 4));
        batch.y = Eigen::MatrixXd::Zero(model->output_dim(), 4);
        for (int leg = 0; leg < 4; ++leg)
            for (int t = 0; t < kWindowLen; ++t)
                for (int d = 0; d < kInputDim; ++d)
                    batch.x[static_cast<std::size_t>(t)](d, leg) =
                        (windows[static_cast<std::size_t>(leg)](t, d) -
                         model->input_norm.mean(d)) /
                        model->input_norm.std(d);
        const Eigen::MatrixXd y = lstm_forward(*model, batch, {});
        std::array<Wrench, 4> out;
        for (int leg = 0; leg < 4; ++leg) {
            const Eigen::VectorXd v = model->target_norm.denormalize(y.col(leg));
            out[static_cast<std::size_t>(leg)] = {{v(3), v(4), v(5)}, {v(0), v(1), v(2)}};
        }
        return out;
    }
};

} // namespace

Trajectory simulate(const GaitParams& gait, const BodyConfig& body, SimMode mode,
                    const LinkageGeometry& geom, const EfParams& ef,
                    const LstmModel* lstm) {
    if (!body.valid()) throw ConfigError("invalid body configuration");
    if (!gait.valid()) throw ConfigError("invalid gait parameters");
    if (lstm && (lstm->input_dim() != kInputDim || lstm->output_dim() != kTargetDim))
        throw SchemaError("model dimensions do not fit the simulation inputs");

    Trajectory traj;
    traj.gait = gait;
    traj.model_tag = lstm ? "lstm" : "ef";

    SimState s;
    traj.states.push_back(s);
    LstmLegDriver driver(lstm);

    while (s.t < body.t_max - 1e-9) {
        if (mode == SimMode::straight && s.y >= body.finish_distance) break;
        if (mode == SimMode::turn && std::abs(s.theta_yaw) >= 2.0 * M_PI) break;

        std::array<Wrench, 4> legs;
        const double v_fwd = forward_speed(s);
        try {
            if (lstm) {
                driver.push_rows(gait, s.t, v_fwd);
                legs = driver.predict();
            } else {
                for (int leg = 0; leg < 4; ++leg)
                    legs[static_cast<std::size_t>(leg)] =
                        ef_leg_wrench_at(geom, ef, gait, leg, s.t, body.dt, v_fwd);
            }
        } catch (const LinkageInfeasible& e) {
            throw LinkageInfeasible(std::string(e.what()) + " (t=" + fmt(s.t) + ")");
        }

        for (int leg = 0; leg < 4; ++leg) {
            const auto l = static_cast<std::size_t>(leg);
            legs[l] = metacenter_wrench(legs[l], body.leg_mounts[l], body.haa_axes[l],
                                        body.haa_angles[l]);
        }
        const double vx_b = std::cos(s.theta_yaw) * s.vx + std::sin(s.theta_yaw) * s.vy;
        const Wrench w_body = total_wrench(legs, vx_b, v_fwd);

        const double c = std::cos(s.theta_yaw);
        const double sn = std::sin(s.theta_yaw);
        Wrench w_world;
        w_world.f = {c * w_body.f.x() - sn * w_body.f.y(),
                     sn * w_body.f.x() + c * w_body.f.y(), w_body.f.z()};
        w_world.tau = {c * w_body.tau.x() - sn * w_body.tau.y(),
                       sn * w_body.tau.x() + c * w_body.tau.y(), w_body.tau.z()};
        traj.total_wrench.push_back(w_world);

        s = step(s, w_body, body);
        traj.states.push_back(s);
    }
    return traj;
}

int turn_direction(const Trajectory& traj) {
    if (traj.total_wrench.empty()) return 1;
    const double cycle = 1.0 / traj.gait.freq;
    double net = 0.0;
    for (std::size_t i = 0; i < traj.total_wrench.size(); ++i) {
        if (traj.states[i].t > cycle) break;
        net += traj.total_wrench[i].tau.z();
    }
    return net >= 0.0 ? 1 : -1;
}

CircleFit fit_circle(const std::vector<Eigen::Vector2d>& pts) {
    CircleFit out;
    if (pts.size() < 3) return out;
    // Kasa linearization: x^2 + y^2 = 2 a x + 2 b y + c.
    Eigen::Matrix3d A = Eigen::Matrix3d::Zero();
    Eigen::Vector3d rhs = Eigen::Vector3d::Zero();
    for (const Eigen::Vector2d& p : pts) {
        const Eigen::Vector3d row{2.0 * p.x(), 2.0 * p.y(), 1.0};
        A += row * row.transpose();
        rhs += row * (p.squaredNorm());
    }
    const Eigen::FullPivLU<Eigen::Matrix3d> lu(A);
    if (!lu.isInvertible()) return out;
    const Eigen::Vector3d sol = lu.solve(rhs);
    out.cx = sol(0);
    out.cy = sol(1);
    const double r2 = sol(2) + sol(0) * sol(0) + sol(1) * sol(1);
    out.r = r2 > 0.0 ? std::sqrt(r2) : 0.0;
    return out;
}

StationStats lateral_mae(const Trajectory& traj, double spacing, double max_y) {
    if (!(spacing > 0.0)) throw ConfigError("station spacing must be positive");
    StationStats out;
    double abs_sum = 0.0;
    for (int k = 0;; ++k) {
        const double station = k * spacing;
        if (station > max_y + 1e-9) break;
        bool found = false;
        double x_at = 0.0;
        for (std::size_t i = 0; i < traj.states.size(); ++i) {
            if (traj.states[i].y >= station - 1e-15) {
                if (i == 0) {
                    x_at = traj.states[0].x;
                } else {
                    const SimState& a = traj.states[i - 1];
                    const SimState& b = traj.states[i];
                    const double span = b.y - a.y;
                    const double u = span > 0.0 ? (station - a.y) / span : 0.0;
                    x_at = a.x + u * (b.x - a.x);
                }
                found = true;
                break;
            }
        }
        if (!found) break;
        abs_sum += std::abs(x_at);
        ++out.stations;
    }
    if (out.stations > 0) out.mae_x = abs_sum / out.stations;
    return out;
}

void save_trajectory_csv(const Trajectory& traj, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << "t,x,y,vx,vy,theta_yaw,dtheta_yaw,f_x,f_y,f_z,tau_x,tau_y,tau_z\n";
    for (std::size_t i = 0; i < traj.total_wrench.size(); ++i) {
        const SimState& s = traj.states[i];
        const Wrench& w = traj.total_wrench[i];
        out << fmt(s.t) << ',' << fmt(s.x) << ',' << fmt(s.y) << ',' << fmt(s.vx) << ','
            << fmt(s.vy) << ',' << fmt(s.theta_yaw) << ',' << fmt(s.dtheta_yaw) << ','
            << fmt(w.f.x()) << ',' << fmt(w.f.y()) << ',' << fmt(w.f.z()) << ','
            << fmt(w.tau.x()) << ',' << fmt(w.tau.y()) << ',' << fmt(w.tau.z()) << "\n";
    }
    if (!out) throw IoError("write failed for " + path);
}

} // namespace hydroquad

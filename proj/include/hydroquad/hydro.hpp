#pragma once

#include <vector>

#include <Eigen/Core>

#include "hydroquad/linkage.hpp"
#include "hydroquad/wrench.hpp"

namespace hydroquad {

/// Quasi-steady empirical force model parameters.
struct EfParams {
    double rho_water = 1000.0; // kg/m^3
    double a = 0.03;           // m, characteristic half-side of the web
    double C_R = 0.7;          // drag coefficient for the flat web
    double m_web = 0.010;      // kg

    double ref_area() const { return (2.0 * a) * (2.0 * a); } // S = (2a)^2

    bool valid() const {
        return rho_water > 0.0 && a > 0.0 && C_R > 0.0 && m_web > 0.0;
    }
};

/// Free-stream flow in the leg's sagittal plane. For tunnel logs the
/// direction is fixed along the tunnel axis; during free swimming it is the
/// water velocity relative to the body.
struct FlowConditions {
    double V_flow = 0.0;                       // m/s, >= 0
    Eigen::Vector2d direction{-1.0, 0.0};      // unit vector, sagittal plane
};

/// Decomposed quasi-steady web load. F_A, F_D, F_I and their sum F_T are
/// scalar magnitudes along the web normal; the wrench maps F_T into the
/// leg-joint frame (sagittal X -> leg y, sagittal Y -> leg z, torque about
/// leg x via the O->Q moment arm). The planar model leaves f_x, tau_y and
/// tau_z at zero.
struct EfForce {
    double F_A = 0.0; // added mass, N
    double F_D = 0.0; // quadratic drag, N
    double F_I = 0.0; // web inertia, N
    double F_T = 0.0; // total = F_A + F_D + F_I
    double v_n = 0.0; // web-normal relative flow speed, m/s (signed)
    Wrench wrench;    // leg-joint frame
};

/// Quasi-steady leg force: F_A = 2 pi rho a^3 * a_n, F_D = 0.5 rho S C_R
/// |v~| v~, F_I = m_web * a_n, where a_n is the web-normal component of the
/// web acceleration and v~ the web-normal component of the relative flow
/// velocity (flow minus web velocity).
EfForce ef_leg_force(const EfParams& p, const WebState& w, const FlowConditions& flow);

/// Towing-tank drag polynomials evaluated on a speed magnitude. These are
/// the raw quadratic fits; they carry a nonzero intercept at rest.
double forward_drag_magnitude(double speed); // F_dy fit, N
double lateral_drag_magnitude(double speed); // F_dx fit, N

/// Drag force applied to the body, componentwise opposing the body-frame
/// velocity. The polynomial fits were made over 0.1-0.35 m/s; below
/// rest_taper_speed the magnitude is faded to zero with a smoothstep so the
/// model produces no force at rest.
inline constexpr double kRestTaperSpeed = 0.02; // m/s

Eigen::Vector2d body_drag(double v_x, double v_y);

/// EF-model wrench series for a replayed joint-angle log: resolves the
/// linkage per sample, differentiates Q at the log cadence and applies the
/// quasi-steady model with each sample's recorded flow speed. Used as the
/// empirical baseline the learned model is compared against.
std::vector<Wrench> ef_wrench_series(const LinkageGeometry& geom, const EfParams& p,
                                     const std::vector<JointState>& joints,
                                     const std::vector<double>& V_flow, double dt,
                                     const Eigen::Vector2d& flow_direction = {-1.0, 0.0});

/// EF-model prediction for one learning window (rows of V_flow, theta_H,
/// theta_K, dtheta_H, dtheta_K at 1/fs spacing): the wrench at the final
/// row, with the web velocity and acceleration taken from second-order
/// backward differences of the in-window poses. Needs at least 4 rows.
/// Returns (tau_x, tau_y, tau_z, f_x, f_y, f_z).
Vector6d ef_window_prediction(const LinkageGeometry& geom, const EfParams& p,
                              const Eigen::MatrixXd& window, double fs,
                              const Eigen::Vector2d& flow_direction = {-1.0, 0.0});

} // namespace hydroquad

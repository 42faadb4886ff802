#pragma once

#include <array>
#include <cmath>

#include "hydroquad/wrench.hpp"

namespace hydroquad {

/// Sinusoidal joint-law parameters plus per-leg phase offsets. This is the
/// optimizer's decision vector.
///
/// The max/min subscripts are role labels inherited from the motion law, not
/// a numeric ordering: theta_H_max (-100 deg) is the most flexed HFE angle
/// and is numerically *below* every admissible theta_H_min; likewise
/// theta_K_min (80 deg) sits above theta_K_max.
struct GaitParams {
    double theta_H_max = deg2rad(-100.0); // fixed endpoint of the HFE swing
    double theta_H_min = deg2rad(10.0);   // free, [-50, 10] deg
    double theta_K_min = deg2rad(80.0);   // fixed endpoint of the KFE swing
    double theta_K_max = deg2rad(-20.0);  // free, [-80, -20] deg
    double freq = 0.3;                    // Hz
    double phi = M_PI / 3.0;              // HFE->KFE phase lag
    std::array<double, 4> alpha{0.0, 0.0, 0.0, 0.0}; // per-leg phase, LF RF LH RH

    /// Structural validity only (finite values, positive frequency); sweep
    /// and optimization ranges are enforced by their owners.
    bool valid() const {
        bool ok = std::isfinite(theta_H_max) && std::isfinite(theta_H_min) &&
                  std::isfinite(theta_K_min) && std::isfinite(theta_K_max) &&
                  std::isfinite(phi) && std::isfinite(freq) && freq > 0.0;
        for (double a : alpha) ok = ok && std::isfinite(a);
        return ok;
    }
};

/// Leg indices used everywhere a per-leg array appears.
enum LegIndex { LF = 0, RF = 1, LH = 2, RH = 3 };

struct JointState {
    double theta_H = 0.0;  // rad
    double theta_K = 0.0;  // rad
    double dtheta_H = 0.0; // rad/s
    double dtheta_K = 0.0; // rad/s
    double t = 0.0;        // s
};

/// Gait-law bounds. Data-collection grids use the narrower frequency range.
namespace bounds {
inline constexpr double theta_H_min_lo_deg = -50.0;
inline constexpr double theta_H_min_hi_deg = 10.0;
inline constexpr double theta_K_max_lo_deg = -80.0;
inline constexpr double theta_K_max_hi_deg = -20.0;
inline constexpr double freq_opt_lo = 0.2;  // Hz, optimization
inline constexpr double freq_opt_hi = 0.65;
inline constexpr double freq_grid_lo = 0.3; // Hz, data-collection grids
inline constexpr double freq_grid_hi = 0.6;
} // namespace bounds

/// Joint angles and exact analytic angular velocities of one leg at time t.
/// The leg's phase offset alpha is added to both joint phases.
JointState gait_angles(const GaitParams& g, int leg_index, double t);

} // namespace hydroquad

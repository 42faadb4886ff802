#include "hydroquad/gait.hpp"

#include <cmath>

namespace hydroquad {

JointState gait_angles(const GaitParams& g, int leg_index, double t) {
    const double alpha = g.alpha[static_cast<std::size_t>(leg_index)];
    const double omega = 2.0 * M_PI * g.freq;

    const double amp_H = 0.5 * (g.theta_H_max - g.theta_H_min);
    const double mid_H = 0.5 * (g.theta_H_max + g.theta_H_min);
    const double amp_K = 0.5 * (g.theta_K_max - g.theta_K_min);
    const double mid_K = 0.5 * (g.theta_K_max + g.theta_K_min);

    const double ph_H = omega * t + alpha;
    const double ph_K = omega * t + g.phi + alpha;

    JointState j;
    j.t = t;
    j.theta_H = amp_H * std::sin(ph_H) + mid_H;
    j.theta_K = amp_K * std::sin(ph_K) + mid_K;
    j.dtheta_H = amp_H * omega * std::cos(ph_H);
    j.dtheta_K = amp_K * omega * std::cos(ph_K);
    return j;
}

} // namespace hydroquad

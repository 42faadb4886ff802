#pragma once

#include <Eigen/Core>

namespace hydroquad {

/// Combined force/torque vector. The frame (leg joint vs. metacenter vs.
/// world) is determined by the producing call site, never by the type.
struct Wrench {
    Eigen::Vector3d f = Eigen::Vector3d::Zero();   // N
    Eigen::Vector3d tau = Eigen::Vector3d::Zero(); // N*m

    Wrench operator+(const Wrench& o) const { return {f + o.f, tau + o.tau}; }
    Wrench& operator+=(const Wrench& o) {
        f += o.f;
        tau += o.tau;
        return *this;
    }

    bool all_finite() const { return f.allFinite() && tau.allFinite(); }
};

using Vector6d = Eigen::Matrix<double, 6, 1>;

/// Channel order used for learning targets and reports: torques first.
inline Vector6d wrench_to_vec(const Wrench& w) {
    Vector6d v;
    v << w.tau, w.f;
    return v;
}

constexpr double deg2rad(double deg) { return deg * M_PI / 180.0; }
constexpr double rad2deg(double rad) { return rad * 180.0 / M_PI; }

} // namespace hydroquad

#pragma once

#include "rhonn/types.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace rhonn {

/// Wheel torques in FL, FR, RL, RR order.
struct TorqueVector {
    std::array<double, 4> T{0.0, 0.0, 0.0, 0.0};
    bool saturated = false;

    double total() const { return T[0] + T[1] + T[2] + T[3]; }
    double yaw_moment() const { return (T[1] + T[3]) - (T[0] + T[2]); }
};

/// Equal axle split: left wheels get (T_t - dM)/4, right wheels (T_t + dM)/4.
/// When a wheel would exceed `cap`, dM is shrunk to the largest feasible magnitude
/// and T_t is kept as requested.
inline TorqueVector allocate(double total_torque, double yaw_moment, double cap) {
    if (!(cap > 0.0) || std::abs(total_torque) > 4.0 * cap) {
        throw Error(ErrorKind::Infeasible, "total torque exceeds four-motor capacity");
    }
    TorqueVector out;
    const double dm_max = 4.0 * cap - std::abs(total_torque);
    double dm = yaw_moment;
    if (std::abs(dm) > dm_max) {
        dm = std::copysign(dm_max, dm);
        out.saturated = true;
    }
    const double left = 0.25 * (total_torque - dm);
    const double right = 0.25 * (total_torque + dm);
    out.T = {left, right, left, right};
    return out;
}

} // namespace rhonn

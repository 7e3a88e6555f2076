#pragma once

#include "rhonn/types.hpp"

#include <algorithm>
#include <cmath>

namespace rhonn {

/// Pure-slip Magic Formula shape coefficients; the peak D is supplied per call.
struct MagicFormula {
    double B = 10.0;
    double C = 1.9;
    double E = 0.97;

    /// D sin(C atan(B s - E (B s - atan(B s))))
    double force(double slip, double D) const {
        const double bs = B * slip;
        return D * std::sin(C * std::atan(bs - E * (bs - std::atan(bs))));
    }

    double origin_slope(double D) const { return B * C * D; }

    /// Slip at which the curve peaks, found by bisection on the monotone inner argument.
    double peak_slip() const {
        const double target = std::tan(kPi / (2.0 * C));
        auto inner = [&](double s) {
            const double bs = B * s;
            return bs - E * (bs - std::atan(bs));
        };
        double lo = 0.0;
        double hi = 1.0;
        while (inner(hi) < target && hi < 1e3) hi *= 2.0;
        for (int i = 0; i < 200; ++i) {
            const double mid = 0.5 * (lo + hi);
            (inner(mid) < target ? lo : hi) = mid;
        }
        return 0.5 * (lo + hi);
    }
};

struct TireConfig {
    MagicFormula lateral{10.0, 1.9, 0.97};
    MagicFormula longitudinal{12.0, 1.65, 0.6};
    /// Longitudinal slip stiffness of the linear tire, per unit vertical load.
    double linear_slip_stiffness_per_load = 12.0 * 1.65;

    void validate() const {
        if (!(lateral.B > 0 && lateral.C > 1 && lateral.C < 2 && longitudinal.B > 0 && longitudinal.C > 1 &&
              longitudinal.C < 2 && lateral.E < 1 && longitudinal.E < 1 && linear_slip_stiffness_per_load > 0)) {
            throw Error(ErrorKind::Config, "invalid tire coefficients");
        }
    }
};

struct WheelForce {
    double fx = 0.0;
    double fy = 0.0;
};

struct SlipPeaks {
    double kappa = 0.0;     // longitudinal peak slip ratio
    double tan_alpha = 0.0; // tangent of the lateral peak slip angle

    static SlipPeaks of(const TireConfig& tc) { return {tc.longitudinal.peak_slip(), std::tan(tc.lateral.peak_slip())}; }
};

/// Combined-slip Magic Formula: the (kappa, tan alpha) demand is normalized by the
/// pure-slip peak slips and the pure-slip curves are evaluated at the combined
/// magnitude, then projected back onto each axis. The resultant never exceeds mu Fz.
/// Sign: positive alpha (lateral velocity to the left) gives a force to the right.
inline WheelForce combined_mf(const TireConfig& tc, const SlipPeaks& peaks, double kappa, double alpha, double mu,
                              double fz) {
    const double D = mu * std::max(fz, 0.0);
    const double kx = peaks.kappa;
    const double ky = peaks.tan_alpha;
    const double lx = kappa / kx;
    const double ly = std::tan(alpha) / ky;
    const double lam = std::hypot(lx, ly);
    if (lam < 1e-12) return {};
    const double fx0 = tc.longitudinal.force(lam * kx, D);
    const double fy0 = tc.lateral.force(std::atan(lam * ky), D);
    return {fx0 * lx / lam, -fy0 * ly / lam};
}

/// Independent pure-slip curves, no interaction between the axes.
inline WheelForce pure_mf(const TireConfig& tc, double kappa, double alpha, double mu, double fz) {
    const double D = mu * std::max(fz, 0.0);
    return {tc.longitudinal.force(kappa, D), -tc.lateral.force(alpha, D)};
}

/// Linear tire: F_y = C_wheel alpha (C_wheel < 0), F_x = C_x kappa, each saturated at mu Fz.
inline WheelForce linear_tire(double lateral_stiffness, double slip_stiffness, double kappa, double alpha,
                              double mu, double fz) {
    const double cap = mu * std::max(fz, 0.0);
    return {std::clamp(slip_stiffness * kappa, -cap, cap), std::clamp(lateral_stiffness * alpha, -cap, cap)};
}

} // namespace rhonn

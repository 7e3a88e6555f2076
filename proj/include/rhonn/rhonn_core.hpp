#pragma once

// Discrete-time recurrent high-order neural network for the planar vehicle
// states (V_x, V_y, yaw rate), with steering-wheel angle as the wrapped input.

#include "rhonn/types.hpp"

#include <Eigen/Core>

#include <array>
#include <cmath>

namespace rhonn {

inline constexpr int kBasisSize = 15;

using Vec15 = Eigen::Matrix<double, kBasisSize, 1>;
using Xi = std::array<double, 4>;

struct SigmoidParams {
    double mu = 1.0;
    double beta = 1.0;

    bool valid() const { return mu > 0.0 && beta > 0.0; }
};

/// S(x) = mu * tanh(beta * x)
inline double sigmoid(double x, const SigmoidParams& p) { return p.mu * std::tanh(p.beta * x); }

struct RhonnConfig {
    SigmoidParams sig_vx{1.0, 0.03};
    SigmoidParams sig_vy{1.0, 0.2};
    SigmoidParams sig_wr{1.0, 2.0};
    SigmoidParams sig_delta{1.0, 0.5};
    bool fixed_term_dt_scaling = true;

    void validate() const {
        if (!sig_vx.valid() || !sig_vy.valid() || !sig_wr.valid() || !sig_delta.valid()) {
            throw Error(ErrorKind::Config, "sigmoid mu and beta must be positive");
        }
    }
};

struct RhonnModel {
    Vec15 W_x = Vec15::Zero();
    Vec15 W_y = Vec15::Zero();
    Vec15 W_r = Vec15::Zero();
    SigmoidParams sig_vx;
    SigmoidParams sig_vy;
    SigmoidParams sig_wr;
    SigmoidParams sig_delta;
    double fixed_gain_vx = 0.0; // 1 / (m r)
    double fixed_gain_wr = 0.0; // w_B / (2 I_z r)
    double dt = 0.05;
    bool fixed_term_dt_scaling = true;

    static RhonnModel make(const VehicleParams& vp, const RhonnConfig& cfg, double dt) {
        cfg.validate();
        RhonnModel model;
        model.sig_vx = cfg.sig_vx;
        model.sig_vy = cfg.sig_vy;
        model.sig_wr = cfg.sig_wr;
        model.sig_delta = cfg.sig_delta;
        model.fixed_gain_vx = 1.0 / (vp.m * vp.r);
        model.fixed_gain_wr = vp.w_B / (2.0 * vp.I_z * vp.r);
        model.dt = dt;
        model.fixed_term_dt_scaling = cfg.fixed_term_dt_scaling;
        return model;
    }

    /// Multiplier applied to the known input terms (dt when the Euler scaling is on).
    double fixed_scale() const { return fixed_term_dt_scaling ? dt : 1.0; }

    Vec15& weights(int neuron) { return neuron == 0 ? W_x : (neuron == 1 ? W_y : W_r); }
    const Vec15& weights(int neuron) const { return neuron == 0 ? W_x : (neuron == 1 ? W_y : W_r); }
};

inline Xi build_xi(const PlanarState& x, double steer, const RhonnModel& model) {
    return {sigmoid(x.vx, model.sig_vx), sigmoid(x.vy, model.sig_vy), sigmoid(x.yaw_rate, model.sig_wr),
            sigmoid(steer, model.sig_delta)};
}

/// Ordering: singles, pairs (12,13,14,23,24,34), triples (123,124,134,234), quadruple.
inline Vec15 build_basis(const Xi& xi) {
    const double a = xi[0], b = xi[1], c = xi[2], d = xi[3];
    Vec15 phi;
    phi << a, b, c, d,                         //
        a * b, a * c, a * d, b * c, b * d, c * d, //
        a * b * c, a * b * d, a * c * d, b * c * d, //
        a * b * c * d;
    return phi;
}

inline Vec15 basis_at(const RhonnModel& model, const PlanarState& x, double steer) {
    return build_basis(build_xi(x, steer, model));
}

/// One-step map with a precomputed basis.
inline PlanarState step_with_basis(const RhonnModel& model, const Vec15& phi, const ControlCommand& u) {
    const double s = model.fixed_scale();
    PlanarState next{model.fixed_gain_vx * s * u.total_torque + model.W_x.dot(phi), model.W_y.dot(phi),
                     model.fixed_gain_wr * s * u.yaw_moment + model.W_r.dot(phi)};
    if (!std::isfinite(next.vx) || !std::isfinite(next.vy) || !std::isfinite(next.yaw_rate)) {
        throw Error(ErrorKind::NonFinite, "RHONN prediction diverged");
    }
    return next;
}

inline PlanarState step(const RhonnModel& model, const PlanarState& x, const ControlCommand& u) {
    return step_with_basis(model, basis_at(model, x, u.steer), u);
}

} // namespace rhonn

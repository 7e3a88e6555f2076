#pragma once

// Lateral-stability controllers producing the external yaw moment dM:
// NMPC on the identified RHONN, NMPC on the Magic Formula companion model,
// and a linear MPC on the 2-DoF bicycle model.

#include "rhonn/allocation.hpp"
#include "rhonn/optim.hpp"
#include "rhonn/plant.hpp"
#include "rhonn/reference_gen.hpp"
#include "rhonn/rhonn_core.hpp"

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <array>
#include <cmath>
#include <optional>
#include <vector>

namespace rhonn {

inline constexpr int kHorizon = 3;

using Vec3 = Eigen::Vector3d;

struct NmpcConfig {
    std::array<double, kHorizon> q{100.0, 100.0, 100.0};
    std::array<double, kHorizon> r{1000.0, 1000.0, 1000.0};
    double dm_min = -1600.0;
    double dm_max = 1600.0;
    int max_evaluations = 400;

    void validate() const {
        for (int i = 0; i < kHorizon; ++i) {
            if (!(q[i] > 0 && r[i] > 0)) throw Error(ErrorKind::Config, "NMPC weights must be positive");
        }
        if (!(dm_min < 0 && dm_max > 0)) throw Error(ErrorKind::Config, "dM bounds must bracket zero");
    }

    Vec3 lower() const { return Vec3::Constant(dm_min); }
    Vec3 upper() const { return Vec3::Constant(dm_max); }
};

struct YawMomentCommand {
    double dm = 0.0;
    double cost = 0.0;
    int iterations = 0;
    bool failed = false;
    Vec3 sequence = Vec3::Zero();
    std::optional<PlanarState> predicted; // one-step-ahead state under the applied sequence
};

using Prediction = std::array<PlanarState, kHorizon>;

/// Rolls the RHONN forward over the horizon; only dM varies between steps.
inline Prediction predict_rhonn(const RhonnModel& model, const PlanarState& x0, const Vec3& dm_seq, double total_torque,
                                double steer) {
    Prediction out;
    PlanarState x = x0;
    for (int i = 0; i < kHorizon; ++i) {
        x = step(model, x, {total_torque, dm_seq[i], steer});
        out[i] = x;
    }
    return out;
}

/// Sideslip from predicted velocities; V_x is floored so the quotient stays defined.
inline double predicted_sideslip(const PlanarState& x) { return x.vy / std::max(x.vx, 0.5); }

/// J = sum q_i (omega_rd - omega_i)^2 + r_i (beta_d - beta_i)^2 with the references held.
inline double nmpc_cost(const Prediction& pred, const ReferenceTargets& refs, const NmpcConfig& cfg) {
    double J = 0.0;
    for (int i = 0; i < kHorizon; ++i) {
        const double ew = refs.yaw_rate - pred[i].yaw_rate;
        const double eb = refs.beta - predicted_sideslip(pred[i]);
        J += cfg.q[i] * ew * ew + cfg.r[i] * eb * eb;
    }
    return J;
}

/// Shift last tick's sequence forward by one step, repeating the tail.
inline Vec3 shift_sequence(const Vec3& seq) { return {seq[1], seq[2], seq[2]}; }

/// Multi-start projected Nelder-Mead + coordinate polish on the dM sequence. The warm start
/// is always evaluated, so the returned cost never exceeds the warm-start cost.
template <class Cost>
YawMomentCommand solve_dm_sequence(const Cost& cost, const NmpcConfig& cfg, const Vec3& warm, int starts = 4) {
    const Vec3 lo = cfg.lower(), hi = cfg.upper();
    const Vec3 w = clamp_box<3>(warm, lo, hi);
    std::vector<Vec3> seeds{w, Vec3::Zero(), Vec3::Constant(0.5 * cfg.dm_max), Vec3::Constant(0.5 * cfg.dm_min)};
    seeds.resize(static_cast<std::size_t>(std::clamp(starts, 1, 4)));
    NelderMeadOptions opt;
    opt.max_evaluations = cfg.max_evaluations;
    YawMomentCommand out;
    try {
        BoxResult<3> best = minimize_box<3>(cost, lo, hi, seeds, opt);
        const double f_warm = cost(w);
        if (f_warm <= best.f) {
            best.x = w;
            best.f = f_warm;
        }
        if (!std::isfinite(best.f) || !best.x.allFinite()) throw Error(ErrorKind::NonFinite, "solver diverged");
        out.sequence = clamp_box<3>(best.x, lo, hi);
        out.dm = out.sequence[0];
        out.cost = best.f;
        out.iterations = best.evaluations + 1;
    } catch (const Error&) {
        out = YawMomentCommand{};
        out.failed = true;
    }
    return out;
}

inline YawMomentCommand solve_nmpc(const RhonnModel& model, const PlanarState& x0, const ReferenceTargets& refs,
                                   double total_torque, double steer, const NmpcConfig& cfg,
                                   const Vec3& warm = Vec3::Zero()) {
    auto cost = [&](const Vec3& dm) { return nmpc_cost(predict_rhonn(model, x0, dm, total_torque, steer), refs, cfg); };
    YawMomentCommand out = solve_dm_sequence(cost, cfg, warm);
    if (!out.failed) out.predicted = step(model, x0, {total_torque, out.dm, steer});
    return out;
}

// --- linear 2-DoF references and model -------------------------------------------------

/// Understeer gradient from the axle cornering stiffnesses, rad per m/s^2.
inline double understeer_gradient(const VehicleParams& p) {
    const double cf = std::abs(p.C_f), cr = std::abs(p.C_r);
    return p.m * (p.l_r * cr - p.l_f * cf) / (p.wheelbase() * cf * cr);
}

/// Linear steady-state yaw rate and sideslip for road-wheel angle `delta_f`.
inline ReferenceTargets linear_steady_state(const VehicleParams& p, double vx, double delta_f) {
    const double L = p.wheelbase();
    const double cr = std::abs(p.C_r);
    const double denom = 1.0 + understeer_gradient(p) * vx * vx / L;
    ReferenceTargets t;
    t.yaw_rate = vx * delta_f / (L * denom);
    t.beta = (p.l_r / L - p.m * p.l_f * vx * vx / (L * L * cr)) * delta_f / denom;
    t.vy = t.beta * vx;
    return t;
}

struct BicycleModel {
    Eigen::Matrix2d A;
    Eigen::Vector2d B_steer;
    Eigen::Vector2d B_dm;
};

/// Continuous 2-DoF model in (V_y, omega) with the linear tire and dM entering the yaw equation.
inline BicycleModel bicycle_model(const VehicleParams& p, double vx) {
    const double m = p.m, Iz = p.I_z, cf = p.C_f, cr = p.C_r, lf = p.l_f, lr = p.l_r;
    BicycleModel b;
    b.A << (cf + cr) / (m * vx), (lf * cf - lr * cr) / (m * vx) - vx, //
        (lf * cf - lr * cr) / (Iz * vx), (lf * lf * cf + lr * lr * cr) / (Iz * vx);
    b.B_steer << -cf / m, -lf * cf / Iz;
    b.B_dm << 0.0, p.w_B / (2.0 * Iz * p.r);
    return b;
}

struct DiscreteBicycle {
    Eigen::Matrix2d Phi;
    Eigen::Vector2d G_steer;
    Eigen::Vector2d G_dm;
};

/// Zero-order-hold discretization through the augmented matrix exponential.
inline DiscreteBicycle discretize(const BicycleModel& b, double dt) {
    Eigen::Matrix4d M = Eigen::Matrix4d::Zero();
    M.topLeftCorner<2, 2>() = b.A;
    M.block<2, 1>(0, 2) = b.B_steer;
    M.block<2, 1>(0, 3) = b.B_dm;
    const Eigen::Matrix4d E = (M * dt).exp();
    return {E.topLeftCorner<2, 2>(), E.block<2, 1>(0, 2), E.block<2, 1>(0, 3)};
}

/// Linear MPC: linear references, linear prediction model, exact box QP.
class LinearMpc {
public:
    LinearMpc(const VehicleParams& p, const NmpcConfig& cfg, double dt) : p_(p), cfg_(cfg), dt_(dt) { cfg_.validate(); }

    const ReferenceTargets& last_references() const { return refs_; }

    YawMomentCommand solve(const PlanarState& x, double steer_wheel) {
        YawMomentCommand out;
        if (!(x.vx > 0.5)) {
            out.failed = true;
            return out;
        }
        const double delta_f = steer_wheel / p_.steering_ratio;
        refs_ = linear_steady_state(p_, x.vx, delta_f);
        const DiscreteBicycle d = discretize(bicycle_model(p_, x.vx), dt_);

        // Outputs y = [omega_1, beta_1, ..., omega_3, beta_3] = y0 + S dM.
        Eigen::Matrix<double, 2 * kHorizon, 1> y0;
        Eigen::Matrix<double, 2 * kHorizon, kHorizon> S = Eigen::Matrix<double, 2 * kHorizon, kHorizon>::Zero();
        Eigen::Vector2d free{x.vy, x.yaw_rate};
        std::array<Eigen::Vector2d, kHorizon> impulse; // response at step i to dM_0
        Eigen::Vector2d acc = d.G_dm;
        for (int i = 0; i < kHorizon; ++i) {
            free = d.Phi * free + d.G_steer * delta_f;
            y0[2 * i] = free[1];
            y0[2 * i + 1] = free[0] / x.vx;
            impulse[i] = acc;
            acc = d.Phi * acc;
        }
        for (int i = 0; i < kHorizon; ++i) {
            for (int j = 0; j <= i; ++j) {
                S(2 * i, j) = impulse[i - j][1];
                S(2 * i + 1, j) = impulse[i - j][0] / x.vx;
            }
        }
        Eigen::Matrix<double, 2 * kHorizon, 1> ref, w;
        for (int i = 0; i < kHorizon; ++i) {
            ref[2 * i] = refs_.yaw_rate;
            ref[2 * i + 1] = refs_.beta;
            w[2 * i] = cfg_.q[i];
            w[2 * i + 1] = cfg_.r[i];
        }
        const Eigen::Matrix3d H = 2.0 * S.transpose() * w.asDiagonal() * S;
        const Vec3 g = 2.0 * S.transpose() * w.asDiagonal() * (y0 - ref);
        const Vec3 dm = box_qp<3>(H, g, cfg_.lower(), cfg_.upper());
        const auto e = (y0 + S * dm - ref).eval();
        out.sequence = dm;
        out.dm = dm[0];
        out.cost = e.dot(w.asDiagonal() * e);
        out.iterations = 1;
        out.predicted = PlanarState{x.vx, (y0[1] + S.row(1).dot(dm)) * x.vx, y0[0] + S.row(0).dot(dm)};
        return out;
    }

private:
    VehicleParams p_;
    NmpcConfig cfg_;
    double dt_;
    ReferenceTargets refs_;
};

/// NMPC on the small-angle Magic Formula companion model with linear references.
class MagicFormulaNmpc {
public:
    MagicFormulaNmpc(const VehicleParams& p, const TireConfig& tires, const NmpcConfig& cfg, double dt,
                     double substep = 0.01)
        : p_(p), model_(p, TireKind::MagicFormula, tires, substep), cfg_(cfg), dt_(dt) {
        cfg_.validate();
    }

    const CompanionModel& model() const { return model_; }
    const ReferenceTargets& last_references() const { return refs_; }

    Prediction predict(const VehicleState& x0, const Vec3& dm_seq, double total_torque, double delta_f) const {
        Prediction out;
        VehicleState x = x0;
        for (int i = 0; i < kHorizon; ++i) {
            const TorqueVector tv = allocate(total_torque, dm_seq[i], p_.motor_cap);
            x = model_.step(x, tv.T, delta_f, dt_);
            out[i] = planar(x);
        }
        return out;
    }

    YawMomentCommand solve(const VehicleState& x, double steer_wheel, double total_torque) {
        if (!(x.vx > 0.5)) {
            YawMomentCommand out;
            out.failed = true;
            return out;
        }
        const double delta_f = steer_wheel / p_.steering_ratio;
        refs_ = linear_steady_state(p_, x.vx, delta_f);
        auto cost = [&](const Vec3& dm) { return nmpc_cost(predict(x, dm, total_torque, delta_f), refs_, cfg_); };
        YawMomentCommand out = solve_dm_sequence(cost, cfg_, shift_sequence(last_), 2);
        if (!out.failed) {
            last_ = out.sequence;
            out.predicted = predict(x, out.sequence, total_torque, delta_f)[0];
        }
        return out;
    }

private:
    VehicleParams p_;
    CompanionModel model_;
    NmpcConfig cfg_;
    double dt_;
    ReferenceTargets refs_;
    Vec3 last_ = Vec3::Zero();
};

/// NMPC on the identified RHONN with warm start from the previous tick.
class RhonnNmpc {
public:
    explicit RhonnNmpc(const NmpcConfig& cfg) : cfg_(cfg) { cfg_.validate(); }

    Vec3 warm_start() const { return shift_sequence(last_); }

    YawMomentCommand solve(const RhonnModel& model, const PlanarState& x, const ReferenceTargets& refs,
                           double total_torque, double steer_wheel) {
        YawMomentCommand out = solve_nmpc(model, x, refs, total_torque, steer_wheel, cfg_, shift_sequence(last_));
        if (!out.failed) last_ = out.sequence;
        return out;
    }

private:
    NmpcConfig cfg_;
    Vec3 last_ = Vec3::Zero();
};

} // namespace rhonn

#pragma once

// Ground-truth 7-DoF vehicle (planar body + four wheel spins) and the
// small-angle companion model used by the physics-based estimators and NMPC-MF.

#include "rhonn/tire.hpp"
#include "rhonn/types.hpp"

#include <array>
#include <cmath>

namespace rhonn {

enum class TireKind { MagicFormula, Linear };

using WheelArray = std::array<double, 4>;

struct TireForces {
    WheelArray fx{}; // tire frame, N
    WheelArray fy{};
    WheelArray kappa{};
    WheelArray alpha{};
    WheelArray fz{};
};

/// Wheel positions relative to the c.g. in FL, FR, RL, RR order (y to the left).
inline std::array<double, 4> wheel_x(const VehicleParams& p) { return {p.l_f, p.l_f, -p.l_r, -p.l_r}; }
inline std::array<double, 4> wheel_y(const VehicleParams& p) {
    return {0.5 * p.w_B, -0.5 * p.w_B, 0.5 * p.w_B, -0.5 * p.w_B};
}

inline WheelArray static_loads(const VehicleParams& p) {
    const double L = p.wheelbase();
    const double front = p.m * kGravity * p.l_r / L;
    const double rear = p.m * kGravity * p.l_f / L;
    return {0.5 * front, 0.5 * front, 0.5 * rear, 0.5 * rear};
}

/// Static loads plus steady-state longitudinal and lateral load transfer.
inline WheelArray vertical_loads(const VehicleParams& p, double ax, double ay) {
    WheelArray fz = static_loads(p);
    const double dlong = 0.5 * p.m * ax * p.h_cg / p.wheelbase();
    const double lat = p.m * ay * p.h_cg / p.w_B;
    const double tf = p.roll_share_front * lat;
    const double tr = (1.0 - p.roll_share_front) * lat;
    fz[0] += -dlong - tf;
    fz[1] += -dlong + tf;
    fz[2] += dlong - tr;
    fz[3] += dlong + tr;
    for (double& f : fz) f = std::max(f, 0.0);
    return fz;
}

struct TireSetup {
    TireKind kind = TireKind::MagicFormula;
    TireConfig config;
    SlipPeaks peaks = SlipPeaks::of(config);

    static TireSetup make(TireKind kind, const TireConfig& cfg) {
        cfg.validate();
        return {kind, cfg, SlipPeaks::of(cfg)};
    }
};

namespace detail {

inline constexpr double kSpeedFloor = 0.1;

struct WheelKinematics {
    WheelArray v_long{};
    WheelArray kappa{};
    WheelArray alpha{};
};

inline WheelKinematics full_kinematics(const VehicleState& s, double steer, const VehicleParams& p) {
    if (s.vx <= kSpeedFloor) throw Error(ErrorKind::DegenerateSpeed, "V_x below slip floor");
    const auto xs = wheel_x(p);
    const auto ys = wheel_y(p);
    WheelKinematics k;
    for (int i = 0; i < 4; ++i) {
        const double delta = i < 2 ? steer : 0.0;
        const double vxi = s.vx - ys[i] * s.yaw_rate;
        const double vyi = s.vy + xs[i] * s.yaw_rate;
        const double c = std::cos(delta), sn = std::sin(delta);
        const double vl = vxi * c + vyi * sn;
        const double vt = -vxi * sn + vyi * c;
        k.v_long[i] = vl;
        k.alpha[i] = std::atan2(vt, std::max(vl, kSpeedFloor));
        k.kappa[i] = (p.r * s.w[i] - vl) / std::max(std::abs(vl), 1.0);
    }
    return k;
}

inline TireForces evaluate_tires(const WheelKinematics& k, const WheelArray& fz, const VehicleParams& p,
                                 const TireSetup& tires) {
    TireForces f;
    f.kappa = k.kappa;
    f.alpha = k.alpha;
    f.fz = fz;
    for (int i = 0; i < 4; ++i) {
        WheelForce wf;
        if (tires.kind == TireKind::MagicFormula) {
            wf = combined_mf(tires.config, tires.peaks, k.kappa[i], k.alpha[i], p.mu, fz[i]);
        } else {
            const double c_axle = i < 2 ? p.C_f : p.C_r;
            wf = linear_tire(0.5 * c_axle, tires.config.linear_slip_stiffness_per_load * static_loads(p)[i],
                             k.kappa[i], k.alpha[i], p.mu, fz[i]);
        }
        f.fx[i] = wf.fx;
        f.fy[i] = wf.fy;
    }
    return f;
}

} // namespace detail

/// Magic Formula forces with combined-slip scaling. `steer` is the road-wheel angle.
inline TireForces tire_forces_mf(const VehicleState& s, double steer, const VehicleParams& p, const TireConfig& tc,
                                 const WheelArray& fz) {
    return detail::evaluate_tires(detail::full_kinematics(s, steer, p), fz, p,
                                  TireSetup::make(TireKind::MagicFormula, tc));
}

/// Linear lateral law F_y = C_axle/2 * alpha per wheel, saturated at mu Fz.
inline TireForces tire_forces_linear(const VehicleState& s, double steer, const VehicleParams& p, const TireConfig& tc,
                                     const WheelArray& fz) {
    return detail::evaluate_tires(detail::full_kinematics(s, steer, p), fz, p, TireSetup::make(TireKind::Linear, tc));
}

using PlantVector = std::array<double, 10>; // vx vy wr psi X Y w1..w4

struct PlantDerivative {
    PlantVector dx{};
    double ax = 0.0; // body longitudinal acceleration, m/s^2
    TireForces forces;
};

inline PlantVector pack(const VehicleState& s) {
    return {s.vx, s.vy, s.yaw_rate, s.psi, s.X, s.Y, s.w[0], s.w[1], s.w[2], s.w[3]};
}

inline VehicleState unpack(const PlantVector& v) {
    VehicleState s;
    s.vx = v[0];
    s.vy = v[1];
    s.yaw_rate = v[2];
    s.psi = v[3];
    s.X = v[4];
    s.Y = v[5];
    s.w = {v[6], v[7], v[8], v[9]};
    return s;
}

/// Full nonlinear planar dynamics. `ax_hint` feeds the algebraic load transfer.
inline PlantDerivative plant_derivative(const VehicleState& s, const WheelArray& torques, double steer,
                                        const VehicleParams& p, const TireSetup& tires, double ax_hint) {
    const auto xs = wheel_x(p);
    const auto ys = wheel_y(p);
    const WheelArray fz = vertical_loads(p, ax_hint, s.vx * s.yaw_rate);
    PlantDerivative d;
    d.forces = detail::evaluate_tires(detail::full_kinematics(s, steer, p), fz, p, tires);

    double fbx = 0.0, fby = 0.0, mz = 0.0;
    for (int i = 0; i < 4; ++i) {
        const double delta = i < 2 ? steer : 0.0;
        const double c = std::cos(delta), sn = std::sin(delta);
        const double bx = d.forces.fx[i] * c - d.forces.fy[i] * sn;
        const double by = d.forces.fx[i] * sn + d.forces.fy[i] * c;
        fbx += bx;
        fby += by;
        mz += xs[i] * by - ys[i] * bx;
        const double roll = p.r * p.rolling_resistance * fz[i] * std::tanh(s.w[i] / 0.5);
        d.dx[6 + i] = (torques[i] - p.r * d.forces.fx[i] - roll) / p.I_w;
    }
    const double drag = 0.5 * p.air_density * p.drag_area * s.vx * std::abs(s.vx);
    d.ax = (fbx - drag) / p.m;
    d.dx[0] = d.ax + s.vy * s.yaw_rate;
    d.dx[1] = fby / p.m - s.vx * s.yaw_rate;
    d.dx[2] = mz / p.I_z;
    d.dx[3] = s.yaw_rate;
    d.dx[4] = s.vx * std::cos(s.psi) - s.vy * std::sin(s.psi);
    d.dx[5] = s.vx * std::sin(s.psi) + s.vy * std::cos(s.psi);
    return d;
}

struct PlantStepResult {
    VehicleState state;
    double ax = 0.0;
    TireForces forces; // at the start of the step
};

/// One RK4 step of the plant. The load-transfer acceleration is held over the step.
inline PlantStepResult integrate(const VehicleState& s, const WheelArray& torques, double steer, const VehicleParams& p,
                                 const TireSetup& tires, double dt, double ax_hint = 0.0) {
    if (!(dt > 0.0) || dt > 1e-3 + 1e-12) throw Error(ErrorKind::Config, "plant step must be in (0, 1 ms]");
    const PlantVector x0 = pack(s);
    auto add = [](const PlantVector& a, const PlantVector& b, double h) {
        PlantVector out;
        for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + h * b[i];
        return out;
    };
    const PlantDerivative k1 = plant_derivative(s, torques, steer, p, tires, ax_hint);
    const PlantDerivative k2 = plant_derivative(unpack(add(x0, k1.dx, 0.5 * dt)), torques, steer, p, tires, ax_hint);
    const PlantDerivative k3 = plant_derivative(unpack(add(x0, k2.dx, 0.5 * dt)), torques, steer, p, tires, ax_hint);
    const PlantDerivative k4 = plant_derivative(unpack(add(x0, k3.dx, dt)), torques, steer, p, tires, ax_hint);
    PlantVector x1;
    for (std::size_t i = 0; i < x0.size(); ++i) {
        x1[i] = x0[i] + dt / 6.0 * (k1.dx[i] + 2.0 * k2.dx[i] + 2.0 * k3.dx[i] + k4.dx[i]);
    }
    PlantStepResult out{unpack(x1), k1.ax, k1.forces};
    if (!out.state.finite()) throw Error(ErrorKind::NonFinite, "plant state diverged");
    return out;
}

/// Stateful wrapper holding the load-transfer hint between steps.
class Plant {
public:
    Plant(const VehicleParams& params, const TireSetup& tires, const VehicleState& initial)
        : params_(params), tires_(tires), state_(initial) {
        params_.validate();
    }

    const VehicleState& state() const { return state_; }
    const VehicleParams& params() const { return params_; }
    const TireForces& last_forces() const { return forces_; }

    void step(const WheelArray& torques, double steer, double dt) {
        PlantStepResult r = integrate(state_, torques, steer, params_, tires_, dt, ax_);
        state_ = r.state;
        ax_ = r.ax;
        forces_ = r.forces;
    }

private:
    VehicleParams params_;
    TireSetup tires_;
    VehicleState state_;
    double ax_ = 0.0;
    TireForces forces_;
};

inline VehicleState rolling_start(const VehicleParams& p, double vx) {
    VehicleState s;
    s.vx = vx;
    s.w.fill(vx / p.r);
    return s;
}

inline double kinetic_energy(const VehicleState& s, const VehicleParams& p) {
    double e = 0.5 * p.m * (s.vx * s.vx + s.vy * s.vy) + 0.5 * p.I_z * s.yaw_rate * s.yaw_rate;
    for (double w : s.w) e += 0.5 * p.I_w * w * w;
    return e;
}

/// Small-angle four-wheel model written term by term from the planar Newton-Euler
/// equations on static loads with pure-slip tires; resistive forces are left out.
class CompanionModel {
public:
    CompanionModel(const VehicleParams& params, TireKind kind, const TireConfig& tires, double substep = 0.005)
        : p_(params), kind_(kind), tires_(tires), substep_(substep), fz_(static_loads(params)) {}

    TireKind kind() const { return kind_; }
    double substep() const { return substep_; }

    struct Forces {
        WheelArray fx{};
        WheelArray fy{};
    };

    Forces tire_forces(const VehicleState& s, double steer) const {
        const auto xs = wheel_x(p_);
        const auto ys = wheel_y(p_);
        const double vx = std::max(s.vx, detail::kSpeedFloor);
        Forces f;
        for (int i = 0; i < 4; ++i) {
            const double delta = i < 2 ? steer : 0.0;
            const double alpha = (s.vy + xs[i] * s.yaw_rate) / vx - delta;
            const double vl = vx - ys[i] * s.yaw_rate;
            const double kappa = (p_.r * s.w[i] - vl) / std::max(std::abs(vl), 1.0);
            WheelForce wf;
            if (kind_ == TireKind::MagicFormula) {
                wf = pure_mf(tires_, kappa, alpha, p_.mu, fz_[i]);
            } else {
                const double c_axle = i < 2 ? p_.C_f : p_.C_r;
                wf = linear_tire(0.5 * c_axle, tires_.linear_slip_stiffness_per_load * fz_[i], kappa, alpha, p_.mu,
                                 fz_[i]);
            }
            f.fx[i] = wf.fx;
            f.fy[i] = wf.fy;
        }
        return f;
    }

    /// Derivatives (vx, vy, wr, w1..w4) for given tire forces.
    std::array<double, 7> derivative_from_forces(const VehicleState& s, const WheelArray& T, double steer,
                                                 const Forces& f) const {
        const double m = p_.m, r = p_.r, Iw = p_.I_w, Iz = p_.I_z;
        WheelArray wdot;
        for (int i = 0; i < 4; ++i) wdot[i] = (T[i] - r * f.fx[i]) / Iw;
        const double sumT = T[0] + T[1] + T[2] + T[3];
        const double sumWd = wdot[0] + wdot[1] + wdot[2] + wdot[3];
        std::array<double, 7> d;
        d[0] = sumT / (m * r) - Iw / (m * r) * sumWd - (f.fy[0] + f.fy[1]) * steer / m + s.vy * s.yaw_rate;
        d[1] = (T[0] + T[1]) * steer / (m * r) - Iw / (m * r) * (wdot[0] + wdot[1]) * steer +
               (f.fy[0] + f.fy[1] + f.fy[2] + f.fy[3]) / m - s.vx * s.yaw_rate;
        const double k = p_.w_B / (2.0 * Iz);
        d[2] = k / r * (T[1] + T[3] - T[0] - T[2]) - k * Iw / r * (wdot[1] + wdot[3] - wdot[0] - wdot[2]) +
               (f.fy[0] + f.fy[1]) * p_.l_f / Iz - (f.fy[2] + f.fy[3]) * p_.l_r / Iz;
        for (int i = 0; i < 4; ++i) d[3 + i] = wdot[i];
        return d;
    }

    std::array<double, 7> derivative(const VehicleState& s, const WheelArray& T, double steer) const {
        return derivative_from_forces(s, T, steer, tire_forces(s, steer));
    }

    /// Advance (vx, vy, wr, wheels) over dt with RK4 substeps; pose is left untouched.
    VehicleState step(const VehicleState& s, const WheelArray& T, double steer, double dt) const {
        const int n = std::max(1, static_cast<int>(std::lround(dt / substep_)));
        const double h = dt / n;
        VehicleState x = s;
        for (int k = 0; k < n; ++k) x = rk4(x, T, steer, h);
        if (!x.finite()) throw Error(ErrorKind::NonFinite, "companion model diverged");
        return x;
    }

private:
    static VehicleState offset(const VehicleState& s, const std::array<double, 7>& d, double h) {
        VehicleState o = s;
        o.vx += h * d[0];
        o.vy += h * d[1];
        o.yaw_rate += h * d[2];
        for (int i = 0; i < 4; ++i) o.w[i] += h * d[3 + i];
        return o;
    }

    VehicleState rk4(const VehicleState& s, const WheelArray& T, double steer, double h) const {
        const auto k1 = derivative(s, T, steer);
        const auto k2 = derivative(offset(s, k1, 0.5 * h), T, steer);
        const auto k3 = derivative(offset(s, k2, 0.5 * h), T, steer);
        const auto k4 = derivative(offset(s, k3, h), T, steer);
        std::array<double, 7> avg;
        for (int i = 0; i < 7; ++i) avg[i] = (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) / 6.0;
        return offset(s, avg, h);
    }

    VehicleParams p_;
    TireKind kind_;
    TireConfig tires_;
    double substep_;
    WheelArray fz_;
};

} // namespace rhonn

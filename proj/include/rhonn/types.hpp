#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

namespace rhonn {

enum class ErrorKind {
    NonFinite,
    SingularInnovation,
    DegenerateSpeed,
    PathExhausted,
    EmptyFeasibleSet,
    LowSpeed,
    Infeasible,
    MismatchedRuns,
    Config,
    Io,
};

inline const char* to_string(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::NonFinite: return "NonFinite";
    case ErrorKind::SingularInnovation: return "SingularInnovation";
    case ErrorKind::DegenerateSpeed: return "DegenerateSpeed";
    case ErrorKind::PathExhausted: return "PathExhausted";
    case ErrorKind::EmptyFeasibleSet: return "EmptyFeasibleSet";
    case ErrorKind::LowSpeed: return "LowSpeed";
    case ErrorKind::Infeasible: return "Infeasible";
    case ErrorKind::MismatchedRuns: return "MismatchedRuns";
    case ErrorKind::Config: return "ConfigError";
    case ErrorKind::Io: return "IoError";
    }
    return "Unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

inline constexpr double kGravity = 9.81;
inline constexpr double kPi = 3.14159265358979323846;

inline constexpr double mps_to_kmh(double v) { return v * 3.6; }
inline constexpr double kmh_to_mps(double v) { return v / 3.6; }
inline constexpr double rad_to_deg(double a) { return a * 180.0 / kPi; }
inline constexpr double deg_to_rad(double a) { return a * kPi / 180.0; }

/// Vehicle and actuator parameters. The first block is the reference vehicle;
/// the rest are plant-only quantities the controllers never see.
struct VehicleParams {
    double m = 2070.0;      // kg
    double I_z = 3658.0;    // kg m^2
    double l_f = 1.362;     // m
    double l_r = 1.308;     // m
    double w_B = 1.715;     // m
    double I_w = 2.4;       // kg m^2
    double r = 0.358;       // m
    double C_f = -108350.0; // N/rad, front axle
    double C_r = -105898.0; // N/rad, rear axle
    double mu = 0.7;        // road adhesion

    double h_cg = 0.55;             // m
    double roll_share_front = 0.55; // fraction of lateral load transfer on the front axle
    double rolling_resistance = 0.012;
    double drag_area = 0.8;         // Cd * A, m^2
    double air_density = 1.2;       // kg/m^3
    double steering_ratio = 16.0;   // steering wheel angle / road wheel angle
    double motor_cap = 400.0;       // N m per wheel

    double wheelbase() const { return l_f + l_r; }

    void validate() const {
        const bool positive = m > 0 && I_z > 0 && l_f > 0 && l_r > 0 && w_B > 0 && I_w > 0 && r > 0 &&
                              mu > 0 && h_cg >= 0 && steering_ratio > 0 && motor_cap > 0;
        if (!positive || C_f >= 0 || C_r >= 0 || roll_share_front < 0 || roll_share_front > 1) {
            throw Error(ErrorKind::Config, "invalid vehicle parameters");
        }
    }
};

/// Plant-truth state: body-frame velocities (x forward, y left), yaw rate (CCW
/// positive), global pose and the four wheel spin rates (FL, FR, RL, RR).
struct VehicleState {
    double vx = 0.0;
    double vy = 0.0;
    double yaw_rate = 0.0;
    double psi = 0.0;
    double X = 0.0;
    double Y = 0.0;
    std::array<double, 4> w{0.0, 0.0, 0.0, 0.0};

    bool finite() const {
        bool ok = std::isfinite(vx) && std::isfinite(vy) && std::isfinite(yaw_rate) && std::isfinite(psi) &&
                  std::isfinite(X) && std::isfinite(Y);
        for (double wi : w) ok = ok && std::isfinite(wi);
        return ok;
    }
};

/// The three states the RHONN and the controllers reason about.
struct PlanarState {
    double vx = 0.0;
    double vy = 0.0;
    double yaw_rate = 0.0;

    bool operator==(const PlanarState&) const = default;
};

inline PlanarState planar(const VehicleState& s) { return {s.vx, s.vy, s.yaw_rate}; }

/// Driver and controller inputs for one control tick. `steer` is the steering
/// wheel angle in rad (positive turns left).
struct ControlCommand {
    double total_torque = 0.0; // T_t, N m
    double yaw_moment = 0.0;   // Delta M, N m (right minus left wheel torques)
    double steer = 0.0;        // delta_w, rad
};

} // namespace rhonn

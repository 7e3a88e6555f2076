#pragma once

#include "rhonn/controllers.hpp"
#include "rhonn/driver.hpp"
#include "rhonn/ekf_learning.hpp"
#include "rhonn/plant.hpp"
#include "rhonn/reference_gen.hpp"
#include "rhonn/rhonn_core.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

namespace rhonn {

inline constexpr int kConfigVersion = 1;

enum class ControllerKind { Off, NmpcRhonn, NmpcMf, Lmpc };

inline const char* to_string(ControllerKind c) {
    switch (c) {
    case ControllerKind::Off: return "off";
    case ControllerKind::NmpcRhonn: return "nmpc-rhonn";
    case ControllerKind::NmpcMf: return "nmpc-mf";
    case ControllerKind::Lmpc: return "lmpc";
    }
    return "off";
}

inline ControllerKind parse_controller(const std::string& s) {
    if (s == "off" || s == "OFF") return ControllerKind::Off;
    if (s == "nmpc-rhonn" || s == "NMPC-RHONN") return ControllerKind::NmpcRhonn;
    if (s == "nmpc-mf" || s == "NMPC-MF") return ControllerKind::NmpcMf;
    if (s == "lmpc" || s == "LMPC") return ControllerKind::Lmpc;
    throw Error(ErrorKind::Config, "unknown controller '" + s + "'");
}

inline const char* to_string(ScenarioKind k) { return k == ScenarioKind::DoubleLaneChange ? "dlc" : "curve"; }

inline ScenarioKind parse_scenario(const std::string& s) {
    if (s == "dlc" || s == "DLC") return ScenarioKind::DoubleLaneChange;
    if (s == "curve" || s == "slippery-curve" || s == "SlipperyCurve") return ScenarioKind::SlipperyCurve;
    throw Error(ErrorKind::Config, "unknown scenario '" + s + "'");
}

struct SimConfig {
    double dt_plant = 0.001;
    double dt_control = 0.05;
    double warmup = 1.0;            // s excluded from estimation statistics
    double max_duration = 40.0;     // s
    double abort_deviation = 15.0;  // m
    double sensor_noise_std = 0.0;  // additive noise on measured V_x, V_y (m/s) and yaw rate (scaled by 0.1)
    double companion_substep = 0.005;
    double mf_nmpc_substep = 0.01;
    double activation_time = -1.0;  // < 0 selects the scenario default
};

struct ScenarioConfig {
    ScenarioKind scenario = ScenarioKind::DoubleLaneChange;
    double mu = 0.35;
    double v0_kmh = 65.0;
    ControllerKind controller = ControllerKind::NmpcRhonn;
    bool identification_only = false;
    std::uint64_t seed = 1;
    std::string out_dir;

    VehicleParams vehicle;
    TireConfig tires;
    RhonnConfig rhonn;
    EkfConfig ekf;
    SearchConfig search;
    NmpcConfig nmpc;
    DriverConfig driver;
    DlcGeometry dlc;
    CurveGeometry curve;
    SimConfig sim;

    /// Vehicle parameters with the scenario's road adhesion.
    VehicleParams plant_params() const {
        VehicleParams p = vehicle;
        p.mu = mu;
        return p;
    }

    double activation_time() const {
        if (sim.activation_time >= 0.0) return sim.activation_time;
        return scenario == ScenarioKind::SlipperyCurve ? 5.0 : 0.0;
    }

    void validate() const {
        if (!(mu > 0.0 && mu <= 1.2)) throw Error(ErrorKind::Config, "mu must lie in (0, 1.2]");
        if (!(v0_kmh > 0.0)) throw Error(ErrorKind::Config, "v0 must be positive");
        if (!(sim.dt_plant > 0 && sim.dt_plant <= 1e-3)) throw Error(ErrorKind::Config, "dt_plant must be in (0, 1 ms]");
        if (!(sim.dt_control >= sim.dt_plant)) throw Error(ErrorKind::Config, "dt_control must be >= dt_plant");
        const double ratio = sim.dt_control / sim.dt_plant;
        if (std::abs(ratio - std::round(ratio)) > 1e-9) {
            throw Error(ErrorKind::Config, "dt_control must be a multiple of dt_plant");
        }
        if (!(sim.max_duration > 0 && sim.warmup >= 0 && sim.abort_deviation > 0 && sim.sensor_noise_std >= 0)) {
            throw Error(ErrorKind::Config, "invalid simulation settings");
        }
        if (!(sim.companion_substep > 0 && sim.mf_nmpc_substep > 0)) {
            throw Error(ErrorKind::Config, "substeps must be positive");
        }
        vehicle.validate();
        tires.validate();
        rhonn.validate();
        ekf.validate();
        search.validate();
        nmpc.validate();
        if (!(driver.preview_time > 0 && driver.min_preview > 0 && driver.max_wheel_angle > 0)) {
            throw Error(ErrorKind::Config, "invalid driver settings");
        }
    }
};

namespace detail {

// Single table of (section, key, field) shared by the reader and the writer.
template <class Cfg, class V>
void visit_fields(Cfg& c, V&& v) {
    v("scenario", "kind", c.scenario);
    v("scenario", "mu", c.mu);
    v("scenario", "v0_kmh", c.v0_kmh);
    v("scenario", "controller", c.controller);
    v("scenario", "identification_only", c.identification_only);
    v("scenario", "seed", c.seed);
    v("scenario", "out_dir", c.out_dir);

    v("vehicle", "m", c.vehicle.m);
    v("vehicle", "I_z", c.vehicle.I_z);
    v("vehicle", "l_f", c.vehicle.l_f);
    v("vehicle", "l_r", c.vehicle.l_r);
    v("vehicle", "w_B", c.vehicle.w_B);
    v("vehicle", "I_w", c.vehicle.I_w);
    v("vehicle", "r", c.vehicle.r);
    v("vehicle", "C_f", c.vehicle.C_f);
    v("vehicle", "C_r", c.vehicle.C_r);
    v("vehicle", "h_cg", c.vehicle.h_cg);
    v("vehicle", "roll_share_front", c.vehicle.roll_share_front);
    v("vehicle", "rolling_resistance", c.vehicle.rolling_resistance);
    v("vehicle", "drag_area", c.vehicle.drag_area);
    v("vehicle", "air_density", c.vehicle.air_density);
    v("vehicle", "steering_ratio", c.vehicle.steering_ratio);
    v("vehicle", "motor_cap", c.vehicle.motor_cap);

    v("tire", "lat_B", c.tires.lateral.B);
    v("tire", "lat_C", c.tires.lateral.C);
    v("tire", "lat_E", c.tires.lateral.E);
    v("tire", "long_B", c.tires.longitudinal.B);
    v("tire", "long_C", c.tires.longitudinal.C);
    v("tire", "long_E", c.tires.longitudinal.E);
    v("tire", "linear_slip_stiffness_per_load", c.tires.linear_slip_stiffness_per_load);

    v("rhonn", "mu_vx", c.rhonn.sig_vx.mu);
    v("rhonn", "beta_vx", c.rhonn.sig_vx.beta);
    v("rhonn", "mu_vy", c.rhonn.sig_vy.mu);
    v("rhonn", "beta_vy", c.rhonn.sig_vy.beta);
    v("rhonn", "mu_wr", c.rhonn.sig_wr.mu);
    v("rhonn", "beta_wr", c.rhonn.sig_wr.beta);
    v("rhonn", "mu_delta", c.rhonn.sig_delta.mu);
    v("rhonn", "beta_delta", c.rhonn.sig_delta.beta);
    v("rhonn", "fixed_term_dt_scaling", c.rhonn.fixed_term_dt_scaling);

    v("ekf", "p0", c.ekf.p0);
    v("ekf", "q", c.ekf.q);
    v("ekf", "r", c.ekf.r);
    v("ekf", "zeta", c.ekf.zeta);
    v("ekf", "weight_limit", c.ekf.weight_limit);
    v("ekf", "trace_limit", c.ekf.trace_limit);

    v("search", "r0_vy", c.search.r0.vy);
    v("search", "r0_wr", c.search.r0.yaw_rate);
    v("search", "dr_vy", c.search.dr.vy);
    v("search", "dr_wr", c.search.dr.yaw_rate);
    v("search", "grid_vy", c.search.grid.vy);
    v("search", "grid_wr", c.search.grid.yaw_rate);
    v("search", "eps", c.search.eps);
    v("search", "eta", c.search.eta);
    v("search", "vy_limit", c.search.vy_limit);
    v("search", "yaw_limit_factor", c.search.yaw_limit_factor);

    v("nmpc", "q1", c.nmpc.q[0]);
    v("nmpc", "q2", c.nmpc.q[1]);
    v("nmpc", "q3", c.nmpc.q[2]);
    v("nmpc", "r1", c.nmpc.r[0]);
    v("nmpc", "r2", c.nmpc.r[1]);
    v("nmpc", "r3", c.nmpc.r[2]);
    v("nmpc", "dm_min", c.nmpc.dm_min);
    v("nmpc", "dm_max", c.nmpc.dm_max);
    v("nmpc", "max_evaluations", c.nmpc.max_evaluations);

    v("driver", "preview_time", c.driver.preview_time);
    v("driver", "min_preview", c.driver.min_preview);
    v("driver", "max_wheel_angle", c.driver.max_wheel_angle);
    v("driver", "speed_kp", c.driver.speed_kp);
    v("driver", "speed_ki", c.driver.speed_ki);

    v("dlc", "lead_in", c.dlc.lead_in);
    v("dlc", "entry", c.dlc.entry);
    v("dlc", "lane_change", c.dlc.lane_change);
    v("dlc", "offset_lane", c.dlc.offset_lane);
    v("dlc", "lane_return", c.dlc.lane_return);
    v("dlc", "exit", c.dlc.exit);
    v("dlc", "run_out", c.dlc.run_out);
    v("dlc", "offset", c.dlc.offset);
    v("dlc", "spacing", c.dlc.spacing);

    v("curve", "lead_in", c.curve.lead_in);
    v("curve", "radius", c.curve.radius);
    v("curve", "arc_angle", c.curve.arc_angle);
    v("curve", "run_out", c.curve.run_out);
    v("curve", "spacing", c.curve.spacing);

    v("sim", "dt_plant", c.sim.dt_plant);
    v("sim", "dt_control", c.sim.dt_control);
    v("sim", "warmup", c.sim.warmup);
    v("sim", "max_duration", c.sim.max_duration);
    v("sim", "abort_deviation", c.sim.abort_deviation);
    v("sim", "sensor_noise_std", c.sim.sensor_noise_std);
    v("sim", "companion_substep", c.sim.companion_substep);
    v("sim", "mf_nmpc_substep", c.sim.mf_nmpc_substep);
    v("sim", "activation_time", c.sim.activation_time);
}

inline std::string format_value(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}
inline std::string format_value(int x) { return std::to_string(x); }
inline std::string format_value(std::uint64_t x) { return std::to_string(x); }
inline std::string format_value(bool x) { return x ? "true" : "false"; }
inline std::string format_value(const std::string& x) { return x; }
inline std::string format_value(ScenarioKind x) { return to_string(x); }
inline std::string format_value(ControllerKind x) { return to_string(x); }

inline void parse_value(const std::string& s, double& out) {
    std::size_t pos = 0;
    try {
        out = std::stod(s, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (pos != s.size()) throw Error(ErrorKind::Config, "not a number: '" + s + "'");
}
inline void parse_value(const std::string& s, int& out) {
    double d = 0;
    parse_value(s, d);
    out = static_cast<int>(d);
}
inline void parse_value(const std::string& s, std::uint64_t& out) {
    try {
        out = std::stoull(s);
    } catch (const std::exception&) {
        throw Error(ErrorKind::Config, "not an unsigned integer: '" + s + "'");
    }
}
inline void parse_value(const std::string& s, bool& out) {
    if (s == "true" || s == "1" || s == "on" || s == "yes") out = true;
    else if (s == "false" || s == "0" || s == "off" || s == "no") out = false;
    else throw Error(ErrorKind::Config, "not a boolean: '" + s + "'");
}
inline void parse_value(const std::string& s, std::string& out) { out = s; }
inline void parse_value(const std::string& s, ScenarioKind& out) { out = parse_scenario(s); }
inline void parse_value(const std::string& s, ControllerKind& out) { out = parse_controller(s); }

} // namespace detail

/// Canonical INI text; every field is written so a run is fully described by it.
inline std::string to_ini(const ScenarioConfig& cfg) {
    std::ostringstream os;
    os << "[meta]\nversion = " << kConfigVersion << "\n";
    std::string section;
    auto writer = [&](const char* sec, const char* key, const auto& field) {
        if (section != sec) {
            section = sec;
            os << "\n[" << sec << "]\n";
        }
        os << key << " = " << detail::format_value(field) << "\n";
    };
    detail::visit_fields(const_cast<ScenarioConfig&>(cfg), writer);
    return os.str();
}

/// Reads an INI document over the defaults; unknown keys are rejected.
inline ScenarioConfig parse_ini(std::istream& in, ScenarioConfig base = {}) {
    boost::property_tree::ptree tree;
    try {
        boost::property_tree::ini_parser::read_ini(in, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw Error(ErrorKind::Config, e.what());
    }
    std::size_t known = 0;
    auto reader = [&](const char* sec, const char* key, auto& field) {
        const auto node = tree.get_optional<std::string>(boost::property_tree::ptree::path_type(std::string(sec) + "." + key));
        if (node) {
            detail::parse_value(*node, field);
            ++known;
        }
    };
    detail::visit_fields(base, reader);
    std::size_t total = 0;
    for (const auto& [sec, node] : tree) {
        for (const auto& [key, value] : node) {
            (void)value;
            if (sec == "meta" && key == "version") {
                if (node.get<int>("version") > kConfigVersion) throw Error(ErrorKind::Config, "config version too new");
                continue;
            }
            ++total;
        }
    }
    if (total != known) throw Error(ErrorKind::Config, "config contains unknown keys");
    return base;
}

inline ScenarioConfig load_config(const std::string& path, ScenarioConfig base = {}) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Io, "cannot open config '" + path + "'");
    return parse_ini(in, base);
}

/// 64-bit FNV-1a, used to tag output files with the configuration they came from.
inline std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::string hex64(std::uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

/// Hash over everything that shapes the plant trajectory apart from the controller.
inline std::string plant_hash(const ScenarioConfig& cfg) {
    std::ostringstream os;
    auto writer = [&](const char* sec, const char* key, const auto& field) {
        const std::string s = sec;
        if (s == "vehicle" || s == "tire" || s == "driver" || (s == "dlc" && cfg.scenario == ScenarioKind::DoubleLaneChange) ||
            (s == "curve" && cfg.scenario == ScenarioKind::SlipperyCurve) ||
            (s == "sim" && std::string(key) == "dt_plant") ||
            (s == "scenario" && (std::string(key) == "kind" || std::string(key) == "mu" || std::string(key) == "v0_kmh" ||
                                 std::string(key) == "seed"))) {
            os << sec << "." << key << "=" << detail::format_value(field) << "\n";
        }
    };
    detail::visit_fields(const_cast<ScenarioConfig&>(cfg), writer);
    return hex64(fnv1a(os.str()));
}

inline std::string config_hash(const ScenarioConfig& cfg) {
    ScenarioConfig c = cfg;
    c.out_dir.clear();
    return hex64(fnv1a(to_ini(c)));
}

} // namespace rhonn

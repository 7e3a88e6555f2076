#pragma once

// Run output files: per-tick CSVs and the JSON summary.

#include "rhonn/harness.hpp"

#include <nlohmann/json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace rhonn {

inline constexpr const char* kTrajectoryColumns =
    "t,X,Y,psi,vx_kmh,vy_kmh,yaw_rate_degs,w1,w2,w3,w4,beta,path_dev,"
    "vx_hat_kmh,vy_hat_kmh,yaw_rate_hat_degs,vx_li_kmh,vy_li_kmh,yaw_rate_li_degs,"
    "vx_mf_kmh,vy_mf_kmh,yaw_rate_mf_degs,vx_pred_kmh,vy_pred_kmh,yaw_rate_pred_degs,vy_ref_kmh,yaw_rate_ref_degs,beta_ref,"
    "dM,T1,T2,T3,T4,T_t,steer_deg,solver_cost,solver_iters,solver_failed,saturated,"
    "search_evaluated,search_converged";

namespace detail {

inline void put(std::string& line, double v) {
    char buf[40];
    if (std::isnan(v)) std::snprintf(buf, sizeof buf, "nan,");
    else std::snprintf(buf, sizeof buf, "%.17g,", v);
    line += buf;
}

inline void put_state(std::string& line, const std::optional<PlanarState>& s) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    put(line, s ? mps_to_kmh(s->vx) : nan);
    put(line, s ? mps_to_kmh(s->vy) : nan);
    put(line, s ? rad_to_deg(s->yaw_rate) : nan);
}

inline std::ofstream open_out(const std::filesystem::path& path) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    std::ofstream os(path);
    if (!os) throw Error(ErrorKind::Io, "cannot write '" + path.string() + "'");
    return os;
}

} // namespace detail

inline std::string trajectory_csv(const RunResult& run) {
    std::string out = std::string("# plant_hash=") + run.plant_hash + " config_hash=" + run.config_hash + "\n";
    out += kTrajectoryColumns;
    out += "\n";
    for (const TickRecord& r : run.ticks) {
        std::string line;
        for (double v : {r.t, r.plant.X, r.plant.Y, r.plant.psi, mps_to_kmh(r.plant.vx), mps_to_kmh(r.plant.vy),
                         rad_to_deg(r.plant.yaw_rate), r.plant.w[0], r.plant.w[1], r.plant.w[2], r.plant.w[3], r.beta,
                         r.path_dev}) {
            detail::put(line, v);
        }
        detail::put_state(line, r.rhonn);
        detail::put_state(line, r.li);
        detail::put_state(line, r.mf);
        detail::put_state(line, r.predicted);
        for (double v : {mps_to_kmh(r.refs.vy), rad_to_deg(r.refs.yaw_rate), r.refs.beta, r.dm, r.torques[0], r.torques[1],
                         r.torques[2], r.torques[3], r.total_torque, rad_to_deg(r.steer), r.solver_cost}) {
            detail::put(line, v);
        }
        line += std::to_string(r.solver_iters) + "," + (r.solver_failed ? "1" : "0") + "," + (r.saturated ? "1" : "0") +
                "," + std::to_string(r.search_evaluated) + "," + (r.search_converged ? "1" : "0") + "\n";
        out += line;
    }
    return out;
}

/// Parses a trajectory CSV back into tick records (SI units). compute_ms is not part
/// of the trajectory file and comes back as zero.
inline std::vector<TickRecord> read_trajectory_csv(std::istream& in, std::string* plant_hash_out = nullptr) {
    std::vector<TickRecord> out;
    std::string line;
    bool header = false;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            const auto pos = line.find("plant_hash=");
            if (pos != std::string::npos && plant_hash_out) *plant_hash_out = line.substr(pos + 11, 16);
            continue;
        }
        if (!header) {
            if (line != kTrajectoryColumns) throw Error(ErrorKind::Io, "unexpected trajectory CSV header");
            header = true;
            continue;
        }
        std::vector<double> v;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) v.push_back(cell == "nan" ? std::numeric_limits<double>::quiet_NaN() : std::stod(cell));
        if (v.size() != 41) throw Error(ErrorKind::Io, "trajectory row has " + std::to_string(v.size()) + " columns");
        TickRecord r;
        r.t = v[0];
        r.plant.X = v[1];
        r.plant.Y = v[2];
        r.plant.psi = v[3];
        r.plant.vx = kmh_to_mps(v[4]);
        r.plant.vy = kmh_to_mps(v[5]);
        r.plant.yaw_rate = deg_to_rad(v[6]);
        for (int i = 0; i < 4; ++i) r.plant.w[i] = v[7 + i];
        r.beta = v[11];
        r.path_dev = v[12];
        auto state_at = [&](int i) { return PlanarState{kmh_to_mps(v[i]), kmh_to_mps(v[i + 1]), deg_to_rad(v[i + 2])}; };
        r.rhonn = state_at(13);
        if (!std::isnan(v[16])) r.li = state_at(16);
        if (!std::isnan(v[19])) r.mf = state_at(19);
        if (!std::isnan(v[22])) r.predicted = state_at(22);
        r.refs = {kmh_to_mps(v[25]), deg_to_rad(v[26]), v[27]};
        r.dm = v[28];
        for (int i = 0; i < 4; ++i) r.torques[i] = v[29 + i];
        r.total_torque = v[33];
        r.steer = deg_to_rad(v[34]);
        r.solver_cost = v[35];
        r.solver_iters = static_cast<int>(v[36]);
        r.solver_failed = v[37] != 0.0;
        r.saturated = v[38] != 0.0;
        r.search_evaluated = static_cast<int>(v[39]);
        r.search_converged = v[40] != 0.0;
        out.push_back(r);
    }
    if (!header) throw Error(ErrorKind::Io, "trajectory CSV has no header");
    return out;
}

inline std::string timing_csv(const RunResult& run) {
    std::string out = "t,compute_ms\n";
    char buf[64];
    for (const TickRecord& r : run.ticks) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", r.t, r.compute_ms);
        out += buf;
    }
    return out;
}

inline nlohmann::json to_json(const ErrorStats& s) {
    return {{"min", s.min}, {"max", s.max}, {"rmse", s.rmse}, {"samples", s.samples}};
}

inline nlohmann::json to_json(const EstimationStats& s) {
    return {{"vx_kmh", to_json(s.vx)}, {"vy_kmh", to_json(s.vy)}, {"yaw_rate_degs", to_json(s.yaw_rate)}};
}

inline nlohmann::json summary_json(const RunResult& run) {
    const RunMetrics& m = run.metrics;
    nlohmann::json j;
    j["version"] = kConfigVersion;
    j["plant_hash"] = run.plant_hash;
    j["config_hash"] = run.config_hash;
    j["scenario"] = to_string(run.config.scenario);
    j["controller"] = to_string(run.config.controller);
    j["identification_only"] = run.config.identification_only;
    j["mu"] = run.config.mu;
    j["v0_kmh"] = run.config.v0_kmh;
    j["seed"] = run.config.seed;
    j["completed"] = run.completed;
    j["terminated"] = run.terminated;
    j["termination"] = run.termination;
    j["ekf_resets"] = run.ekf_resets;
    nlohmann::json mj;
    mj["estimation"]["RHONN"] = to_json(m.rhonn);
    if (m.mf) mj["estimation"]["7DoF-MF"] = to_json(*m.mf);
    if (m.li) mj["estimation"]["7DoF-LI"] = to_json(*m.li);
    mj["vx_convergence_time_s"] = std::isfinite(m.vx_convergence_time) ? nlohmann::json(m.vx_convergence_time) : nlohmann::json();
    mj["phase_area"] = m.phase_area;
    mj["max_deviation_m"] = m.max_deviation;
    mj["mean_compute_ms"] = m.mean_compute_ms;
    mj["max_compute_ms"] = m.max_compute_ms;
    mj["allocation_saturations"] = m.allocation_saturations;
    mj["bound_hits"] = m.bound_hits;
    mj["bound_violations"] = m.bound_violations;
    mj["solver_failures"] = m.solver_failures;
    mj["search_unconverged"] = m.search_unconverged;
    mj["ticks"] = m.ticks;
    j["metrics"] = mj;
    return j;
}

/// Writes the four run files into `dir`, creating it if needed.
inline void write_run(const RunResult& run, const std::filesystem::path& dir) {
    detail::open_out(dir / "trajectory.csv") << trajectory_csv(run);
    detail::open_out(dir / "timing.csv") << timing_csv(run);
    detail::open_out(dir / "summary.json") << summary_json(run).dump(2) << "\n";
    detail::open_out(dir / "config.ini") << to_ini(run.config);
}

inline std::string format_estimation_table(const std::vector<EstimationRow>& rows) {
    std::ostringstream os;
    char buf[160];
    std::snprintf(buf, sizeof buf, "%-9s %-22s %-22s %-22s\n", "model", "Vx km/h min/max/rmse", "Vy km/h min/max/rmse",
                  "wr deg/s min/max/rmse");
    os << buf;
    auto cell = [](const ErrorStats& s) {
        char b[40];
        std::snprintf(b, sizeof b, "%.3f/%.3f/%.3f", s.min, s.max, s.rmse);
        return std::string(b);
    };
    for (const EstimationRow& r : rows) {
        std::snprintf(buf, sizeof buf, "%-9s %-22s %-22s %-22s\n", r.name.c_str(), cell(r.stats.vx).c_str(),
                      cell(r.stats.vy).c_str(), cell(r.stats.yaw_rate).c_str());
        os << buf;
    }
    return os.str();
}

inline std::string format_comparison_table(const std::vector<ComparisonRow>& rows) {
    std::ostringstream os;
    char buf[200];
    std::snprintf(buf, sizeof buf, "%-11s %-10s %-12s %-12s %-10s %-10s %-6s\n", "controller", "completed", "phase_area",
                  "max_dev_m", "mean_ms", "alloc_sat", "dm_sat");
    os << buf;
    for (const ComparisonRow& r : rows) {
        std::snprintf(buf, sizeof buf, "%-11s %-10s %-12.5f %-12.4f %-10.3f %-10d %-6d\n", r.controller.c_str(),
                      r.completed ? "yes" : r.termination.c_str(), r.phase_area, r.max_deviation, r.mean_compute_ms,
                      r.allocation_saturations, r.bound_hits);
        os << buf;
    }
    return os.str();
}

} // namespace rhonn

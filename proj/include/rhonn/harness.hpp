#pragma once

// Closed-loop scenario runner: 1 ms plant, 50 ms control tick, per-tick records,
// summary metrics and the report / frontier helpers built on top of them.

#include "rhonn/allocation.hpp"
#include "rhonn/config.hpp"
#include "rhonn/controllers.hpp"
#include "rhonn/driver.hpp"
#include "rhonn/ekf_learning.hpp"
#include "rhonn/metrics.hpp"
#include "rhonn/plant.hpp"
#include "rhonn/reference_gen.hpp"

#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace rhonn {

struct TickRecord {
    double t = 0.0;
    VehicleState plant;
    double beta = 0.0;
    double path_dev = 0.0;
    PlanarState rhonn;
    std::optional<PlanarState> li;
    std::optional<PlanarState> mf;
    std::optional<PlanarState> predicted; // controller's one-step-ahead state, when it ran
    ReferenceTargets refs;
    double dm = 0.0;
    WheelArray torques{};
    double total_torque = 0.0;
    double steer = 0.0; // steering-wheel angle, rad
    double solver_cost = 0.0;
    int solver_iters = 0;
    bool solver_failed = false;
    bool saturated = false;
    int search_evaluated = 0;
    bool search_converged = false;
    double compute_ms = 0.0;
};

/// Estimation error statistics in display units (km/h for speeds, deg/s for yaw rate).
struct EstimationStats {
    ErrorStats vx;
    ErrorStats vy;
    ErrorStats yaw_rate;
};

struct RunMetrics {
    EstimationStats rhonn;
    std::optional<EstimationStats> li;
    std::optional<EstimationStats> mf;
    double vx_convergence_time = std::numeric_limits<double>::infinity(); // s until |vx error| < 1 km/h for good
    double phase_area = 0.0;
    double max_deviation = 0.0;
    double mean_compute_ms = 0.0;
    double max_compute_ms = 0.0;
    int allocation_saturations = 0;
    int bound_hits = 0;
    int bound_violations = 0;
    int solver_failures = 0;
    int search_unconverged = 0;
    int ticks = 0;
};

struct RunResult {
    ScenarioConfig config;
    std::vector<TickRecord> ticks;
    RunMetrics metrics;
    bool completed = false;
    bool terminated = false;
    std::string termination; // empty, or the reason the run stopped early
    int ekf_resets = 0;
    std::string plant_hash;
    std::string config_hash;
};

/// Arc length at which the maneuver counts as completed.
inline double finish_distance(const ScenarioConfig& cfg) {
    if (cfg.scenario == ScenarioKind::DoubleLaneChange) {
        const DlcGeometry& g = cfg.dlc;
        return g.lead_in + g.entry + g.lane_change + g.offset_lane + g.lane_return + g.exit;
    }
    return cfg.curve.lead_in + cfg.curve.radius * cfg.curve.arc_angle;
}

inline EstimationStats estimation_stats(std::span<const TickRecord> ticks, double warmup,
                                        PlanarState (*pick)(const TickRecord&)) {
    std::vector<double> tvx, tvy, twr, evx, evy, ewr;
    for (const TickRecord& r : ticks) {
        if (r.t < warmup) continue;
        const PlanarState e = pick(r);
        tvx.push_back(mps_to_kmh(r.plant.vx));
        tvy.push_back(mps_to_kmh(r.plant.vy));
        twr.push_back(rad_to_deg(r.plant.yaw_rate));
        evx.push_back(mps_to_kmh(e.vx));
        evy.push_back(mps_to_kmh(e.vy));
        ewr.push_back(rad_to_deg(e.yaw_rate));
    }
    return {error_stats(tvx, evx), error_stats(tvy, evy), error_stats(twr, ewr)};
}

inline RunMetrics compute_metrics(std::span<const TickRecord> ticks, const ScenarioConfig& cfg) {
    RunMetrics m;
    m.ticks = static_cast<int>(ticks.size());
    if (ticks.empty()) return m;
    const double warmup = cfg.sim.warmup;
    m.rhonn = estimation_stats(ticks, warmup, [](const TickRecord& r) { return r.rhonn; });
    if (ticks.front().li) m.li = estimation_stats(ticks, warmup, [](const TickRecord& r) { return *r.li; });
    if (ticks.front().mf) m.mf = estimation_stats(ticks, warmup, [](const TickRecord& r) { return *r.mf; });

    for (std::size_t i = ticks.size(); i-- > 0;) {
        if (std::abs(mps_to_kmh(ticks[i].plant.vx - ticks[i].rhonn.vx)) >= 1.0) {
            m.vx_convergence_time = i + 1 < ticks.size() ? ticks[i + 1].t : std::numeric_limits<double>::infinity();
            break;
        }
        if (i == 0) m.vx_convergence_time = ticks[0].t;
    }

    std::vector<double> beta;
    double compute = 0.0;
    for (const TickRecord& r : ticks) {
        beta.push_back(r.beta);
        m.max_deviation = std::max(m.max_deviation, std::abs(r.path_dev));
        compute += r.compute_ms;
        m.max_compute_ms = std::max(m.max_compute_ms, r.compute_ms);
        if (r.saturated) ++m.allocation_saturations;
        if (r.dm <= cfg.nmpc.dm_min + 1e-9 || r.dm >= cfg.nmpc.dm_max - 1e-9) ++m.bound_hits;
        if (r.dm < cfg.nmpc.dm_min - 1e-9 || r.dm > cfg.nmpc.dm_max + 1e-9) ++m.bound_violations;
        if (r.solver_failed) ++m.solver_failures;
        if (cfg.controller == ControllerKind::NmpcRhonn && r.search_evaluated > 0 && !r.search_converged) {
            ++m.search_unconverged;
        }
    }
    m.mean_compute_ms = compute / static_cast<double>(ticks.size());
    if (beta.size() >= 3) m.phase_area = phase_area(beta, cfg.sim.dt_control);
    return m;
}

/// Frozen NMPC-RHONN problem as seen by the solver at one tick.
struct NmpcInstance {
    double t = 0.0;
    RhonnModel model;
    PlanarState x0;
    ReferenceTargets refs;
    double total_torque = 0.0;
    double steer = 0.0;
    Vec3 warm = Vec3::Zero();
    YawMomentCommand command;
};

using NmpcHook = std::function<void(const NmpcInstance&)>;

namespace detail {

struct Estimators {
    std::optional<CompanionModel> li;
    std::optional<CompanionModel> mf;
    VehicleState li_state;
    VehicleState mf_state;
};

} // namespace detail

/// Runs one scenario end to end. Plant failures end the run with terminated = true
/// and the records gathered so far; they are results, not exceptions.
inline RunResult run_scenario(const ScenarioConfig& cfg, const NmpcHook& hook = {}) {
    cfg.validate();
    RunResult out;
    out.config = cfg;
    out.plant_hash = plant_hash(cfg);
    out.config_hash = config_hash(cfg);

    const VehicleParams p = cfg.plant_params();
    const Path path = scenario_path(cfg.scenario, cfg.dlc, cfg.curve);
    const double finish = finish_distance(cfg);
    const double dtc = cfg.sim.dt_control;
    const int substeps = static_cast<int>(std::lround(dtc / cfg.sim.dt_plant));
    const double v0 = kmh_to_mps(cfg.v0_kmh);
    const bool curve = cfg.scenario == ScenarioKind::SlipperyCurve;
    const ControllerKind ctrl = cfg.identification_only ? ControllerKind::Off : cfg.controller;

    Plant plant(p, TireSetup::make(TireKind::MagicFormula, cfg.tires), rolling_start(p, v0));
    Identifier ident(RhonnModel::make(p, cfg.rhonn, dtc), cfg.ekf);
    SpeedController speed(v0, cfg.driver.speed_kp, cfg.driver.speed_ki, 4.0 * p.motor_cap);
    RhonnNmpc rhonn_nmpc(cfg.nmpc);
    MagicFormulaNmpc mf_nmpc(p, cfg.tires, cfg.nmpc, dtc, cfg.sim.mf_nmpc_substep);
    LinearMpc lmpc(p, cfg.nmpc, dtc);

    detail::Estimators est;
    if (cfg.identification_only) {
        est.li.emplace(p, TireKind::Linear, cfg.tires, cfg.sim.companion_substep);
        est.mf.emplace(p, TireKind::MagicFormula, cfg.tires, cfg.sim.companion_substep);
        est.li_state = est.mf_state = plant.state();
    }

    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> noise(0.0, 1.0);
    const double sigma = cfg.sim.sensor_noise_std;

    LateralPoint prev_point{0.0, 0.0};
    const int max_ticks = static_cast<int>(std::floor(cfg.sim.max_duration / dtc + 1e-9));

    for (int k = 0; k <= max_ticks; ++k) {
        TickRecord rec;
        rec.t = k * dtc;
        const VehicleState truth = plant.state();
        rec.plant = truth;
        rec.beta = std::atan2(truth.vy, truth.vx);
        const Path::Projection proj = path.project(truth.X, truth.Y);
        rec.path_dev = proj.lateral;

        if (proj.s >= finish) {
            out.completed = true;
            break;
        }
        if (std::abs(proj.lateral) > cfg.sim.abort_deviation) {
            out.terminated = true;
            out.termination = "off_path";
            break;
        }
        if (truth.vx < 1.0) {
            out.terminated = true;
            out.termination = "low_speed";
            break;
        }

        PlanarState meas = planar(truth);
        if (sigma > 0.0) {
            meas.vx += sigma * noise(rng);
            meas.vy += sigma * noise(rng);
            meas.yaw_rate += 0.1 * sigma * noise(rng);
        }

        double steer = 0.0;
        try {
            steer = driver_steer(truth, path, cfg.driver.preview_time, p, cfg.driver);
        } catch (const Error& e) {
            out.terminated = true;
            out.termination = to_string(e.kind());
            break;
        }
        const double total_torque = curve ? speed.update(meas.vx, dtc) : 0.0;
        const bool active = rec.t >= cfg.activation_time() - 1e-12;

        rec.rhonn = ident.estimate();
        if (est.li) {
            rec.li = planar(est.li_state);
            rec.mf = planar(est.mf_state);
        }

        const auto t0 = std::chrono::steady_clock::now();
        ident.observe(meas);
        YawMomentCommand cmd;
        if (active) {
            switch (ctrl) {
            case ControllerKind::NmpcRhonn: {
                const SearchResult sr =
                    rhonn_references(prev_point, cfg.search, ident.model(), meas.vx, steer, cfg.mu);
                rec.refs = sr.targets;
                rec.search_evaluated = sr.evaluated;
                rec.search_converged = sr.converged;
                const Vec3 warm = rhonn_nmpc.warm_start();
                cmd = rhonn_nmpc.solve(ident.model(), meas, sr.targets, total_torque, steer);
                if (hook) hook({rec.t, ident.model(), meas, sr.targets, total_torque, steer, warm, cmd});
                break;
            }
            case ControllerKind::NmpcMf: {
                VehicleState x = truth;
                x.vx = meas.vx;
                x.vy = meas.vy;
                x.yaw_rate = meas.yaw_rate;
                cmd = mf_nmpc.solve(x, steer, total_torque);
                rec.refs = mf_nmpc.last_references();
                break;
            }
            case ControllerKind::Lmpc:
                cmd = lmpc.solve(meas, steer);
                rec.refs = lmpc.last_references();
                break;
            case ControllerKind::Off:
                break;
            }
        }

        const TorqueVector tv = allocate(total_torque, cmd.dm, p.motor_cap);
        rec.dm = tv.yaw_moment();
        rec.torques = tv.T;
        rec.total_torque = total_torque;
        rec.steer = steer;
        rec.saturated = tv.saturated;
        rec.solver_cost = cmd.cost;
        rec.solver_iters = cmd.iterations;
        rec.solver_failed = cmd.failed;
        rec.predicted = cmd.predicted;

        ident.predict(meas, {total_torque, rec.dm, steer});
        const auto t1 = std::chrono::steady_clock::now();
        rec.compute_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
        prev_point = {meas.vy, meas.yaw_rate};

        const double delta_f = steer / p.steering_ratio;
        if (est.li) {
            try {
                est.li_state = est.li->step(est.li_state, tv.T, delta_f, dtc);
                est.mf_state = est.mf->step(est.mf_state, tv.T, delta_f, dtc);
            } catch (const Error& e) {
                out.terminated = true;
                out.termination = std::string("estimator_") + to_string(e.kind());
                out.ticks.push_back(rec);
                break;
            }
        }
        out.ticks.push_back(rec);

        try {
            for (int i = 0; i < substeps; ++i) plant.step(tv.T, delta_f, cfg.sim.dt_plant);
        } catch (const Error& e) {
            out.terminated = true;
            out.termination = to_string(e.kind());
            break;
        }
    }
    if (!out.completed && !out.terminated) out.termination = "timeout";
    out.ekf_resets = ident.resets();
    out.metrics = compute_metrics(out.ticks, cfg);
    return out;
}

/// Largest DLC entry speed (km/h, on a `resolution` lattice) completing the maneuver
/// within `max_deviation` of the path. Returns `lo` if even that speed fails.
struct FrontierResult {
    double speed_kmh = 0.0;
    int runs = 0;
};

inline bool frontier_pass(const RunResult& r, double max_deviation) {
    return r.completed && !r.terminated && r.metrics.max_deviation < max_deviation;
}

inline FrontierResult speed_frontier(ScenarioConfig base, ControllerKind controller, double lo = 20.0, double hi = 130.0,
                                     double resolution = 0.5, double max_deviation = 1.0) {
    if (base.scenario != ScenarioKind::DoubleLaneChange) {
        throw Error(ErrorKind::Config, "speed frontier is defined for the double lane change");
    }
    base.controller = controller;
    base.identification_only = false;
    FrontierResult out;
    auto passes = [&](double v) {
        ScenarioConfig c = base;
        c.v0_kmh = v;
        ++out.runs;
        return frontier_pass(run_scenario(c), max_deviation);
    };
    long a = std::lround(lo / resolution);
    long b = std::lround(hi / resolution);
    if (!passes(a * resolution)) {
        out.speed_kmh = a * resolution;
        return out;
    }
    if (passes(b * resolution)) {
        out.speed_kmh = b * resolution;
        return out;
    }
    while (b - a > 1) {
        const long mid = (a + b) / 2;
        if (passes(mid * resolution)) a = mid;
        else b = mid;
    }
    out.speed_kmh = a * resolution;
    return out;
}

/// One estimator's trace against the plant truth it was run on.
struct ModelTrace {
    std::string name;
    std::vector<double> t;
    std::vector<PlanarState> truth;
    std::vector<PlanarState> estimate;
};

struct EstimationRow {
    std::string name;
    EstimationStats stats;
};

inline std::vector<ModelTrace> model_traces(const RunResult& run) {
    std::vector<ModelTrace> out(1);
    out[0].name = "RHONN";
    const bool companions = !run.ticks.empty() && run.ticks.front().li.has_value();
    if (companions) {
        out.push_back({"7DoF-MF", {}, {}, {}});
        out.push_back({"7DoF-LI", {}, {}, {}});
    }
    for (const TickRecord& r : run.ticks) {
        for (ModelTrace& m : out) {
            m.t.push_back(r.t);
            m.truth.push_back(planar(r.plant));
        }
        out[0].estimate.push_back(r.rhonn);
        if (companions) {
            out[1].estimate.push_back(*r.mf);
            out[2].estimate.push_back(*r.li);
        }
    }
    return out;
}

/// Min / max / RMSE per state for each model after the warmup window.
inline std::vector<EstimationRow> estimation_report(std::span<const ModelTrace> traces, double warmup) {
    std::vector<EstimationRow> rows;
    for (const ModelTrace& m : traces) {
        if (m.truth.size() != traces.front().truth.size() || m.t != traces.front().t) {
            throw Error(ErrorKind::MismatchedRuns, "estimation traces do not share the same time base");
        }
        for (std::size_t i = 0; i < m.truth.size(); ++i) {
            if (!(m.truth[i] == traces.front().truth[i])) {
                throw Error(ErrorKind::MismatchedRuns, "estimation traces do not share the same plant truth");
            }
        }
        std::vector<double> tvx, tvy, twr, evx, evy, ewr;
        for (std::size_t i = 0; i < m.truth.size(); ++i) {
            if (m.t[i] < warmup) continue;
            tvx.push_back(mps_to_kmh(m.truth[i].vx));
            tvy.push_back(mps_to_kmh(m.truth[i].vy));
            twr.push_back(rad_to_deg(m.truth[i].yaw_rate));
            evx.push_back(mps_to_kmh(m.estimate[i].vx));
            evy.push_back(mps_to_kmh(m.estimate[i].vy));
            ewr.push_back(rad_to_deg(m.estimate[i].yaw_rate));
        }
        rows.push_back({m.name, {error_stats(tvx, evx), error_stats(tvy, evy), error_stats(twr, ewr)}});
    }
    return rows;
}

struct ComparisonRow {
    std::string controller;
    bool completed = false;
    std::string termination;
    double phase_area = 0.0;
    double max_deviation = 0.0;
    double mean_compute_ms = 0.0;
    int allocation_saturations = 0;
    int bound_hits = 0;
};

/// Side-by-side controller metrics; refuses runs made on different plants.
inline std::vector<ComparisonRow> comparison_table(std::span<const RunResult> runs) {
    std::vector<ComparisonRow> rows;
    for (const RunResult& r : runs) {
        if (r.plant_hash != runs.front().plant_hash) {
            throw Error(ErrorKind::MismatchedRuns, "runs were made with different plant configurations");
        }
        rows.push_back({to_string(r.config.identification_only ? ControllerKind::Off : r.config.controller), r.completed,
                        r.termination, r.metrics.phase_area, r.metrics.max_deviation, r.metrics.mean_compute_ms,
                        r.metrics.allocation_saturations, r.metrics.bound_hits});
    }
    return rows;
}

} // namespace rhonn

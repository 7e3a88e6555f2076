#include "rhonn/harness.hpp"
#include "rhonn/io.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace rhonn;

namespace {

struct CommonOptions {
    std::string config;
    std::optional<std::string> scenario;
    std::optional<std::string> controller;
    std::optional<double> mu;
    std::optional<double> v0;
    std::optional<std::uint64_t> seed;
    std::string out;
};

void add_common(CLI::App* app, CommonOptions& o) {
    app->add_option("--config", o.config, "INI configuration file")->check(CLI::ExistingFile);
    app->add_option("--scenario", o.scenario, "dlc | curve");
    app->add_option("--controller", o.controller, "off | lmpc | nmpc-mf | nmpc-rhonn");
    app->add_option("--mu", o.mu, "road adhesion coefficient");
    app->add_option("--v0", o.v0, "initial speed, km/h");
    app->add_option("--seed", o.seed, "noise seed");
    app->add_option("--out", o.out, "output directory");
}

ScenarioConfig resolve(const CommonOptions& o) {
    ScenarioConfig cfg = o.config.empty() ? ScenarioConfig{} : load_config(o.config);
    if (o.scenario) cfg.scenario = parse_scenario(*o.scenario);
    if (o.controller) cfg.controller = parse_controller(*o.controller);
    if (o.mu) cfg.mu = *o.mu;
    if (o.v0) cfg.v0_kmh = *o.v0;
    if (o.seed) cfg.seed = *o.seed;
    if (!o.out.empty()) cfg.out_dir = o.out;
    cfg.validate();
    return cfg;
}

void print_run(const RunResult& r) {
    const RunMetrics& m = r.metrics;
    std::printf("scenario=%s controller=%s mu=%.3g v0=%.1f completed=%d termination=%s\n", to_string(r.config.scenario),
                r.config.identification_only ? "identify" : to_string(r.config.controller), r.config.mu, r.config.v0_kmh,
                r.completed ? 1 : 0, r.termination.empty() ? "-" : r.termination.c_str());
    std::printf("  phase_area=%.6g max_dev=%.4f m mean_ms=%.3f max_ms=%.3f ticks=%d dm_sat=%d alloc_sat=%d "
                "search_unconverged=%d resets=%d\n",
                m.phase_area, m.max_deviation, m.mean_compute_ms, m.max_compute_ms, m.ticks, m.bound_hits,
                m.allocation_saturations, m.search_unconverged, r.ekf_resets);
    std::printf("  rhonn rmse vx=%.3f km/h vy=%.3f km/h wr=%.3f deg/s  vx settles at %.2f s\n", m.rhonn.vx.rmse,
                m.rhonn.vy.rmse, m.rhonn.yaw_rate.rmse, m.vx_convergence_time);
}

int cmd_run(const CommonOptions& o, bool identify) {
    ScenarioConfig cfg = resolve(o);
    if (identify) cfg.identification_only = true;
    const RunResult r = run_scenario(cfg);
    print_run(r);
    if (!cfg.out_dir.empty()) write_run(r, cfg.out_dir);
    return 0;
}

int cmd_report(const CommonOptions& o, const std::string& kind) {
    const ScenarioConfig base = resolve(o);
    if (kind == "estimation" || kind == "all") {
        ScenarioConfig cfg = base;
        cfg.identification_only = true;
        const RunResult r = run_scenario(cfg);
        if (!base.out_dir.empty()) write_run(r, fs::path(base.out_dir) / "identification");
        const auto traces = model_traces(r);
        std::printf("estimation errors, %s mu=%.3g v0=%.1f km/h (first %.1f s excluded)\n", to_string(cfg.scenario),
                    cfg.mu, cfg.v0_kmh, cfg.sim.warmup);
        std::cout << format_estimation_table(estimation_report(traces, cfg.sim.warmup));
    }
    if (kind == "comparison" || kind == "all") {
        std::vector<RunResult> runs;
        for (ControllerKind c :
             {ControllerKind::Off, ControllerKind::Lmpc, ControllerKind::NmpcMf, ControllerKind::NmpcRhonn}) {
            ScenarioConfig cfg = base;
            cfg.identification_only = false;
            cfg.controller = c;
            runs.push_back(run_scenario(cfg));
            if (!base.out_dir.empty()) write_run(runs.back(), fs::path(base.out_dir) / to_string(c));
        }
        std::printf("controller comparison, %s mu=%.3g v0=%.1f km/h, plant %s\n", to_string(base.scenario), base.mu,
                    base.v0_kmh, runs.front().plant_hash.c_str());
        std::cout << format_comparison_table(comparison_table(runs));
    }
    return 0;
}

int cmd_frontier(const CommonOptions& o, double lo, double hi, double resolution) {
    ScenarioConfig base = resolve(o);
    std::vector<ControllerKind> kinds;
    if (o.controller) kinds.push_back(base.controller);
    else kinds = {ControllerKind::Off, ControllerKind::Lmpc, ControllerKind::NmpcMf, ControllerKind::NmpcRhonn};
    for (ControllerKind c : kinds) {
        const FrontierResult f = speed_frontier(base, c, lo, hi, resolution);
        std::printf("%-11s frontier %.1f km/h (%d runs)\n", to_string(c), f.speed_kmh, f.runs);
    }
    return 0;
}

// Captures frozen NMPC-RHONN problems from a closed-loop run for the solver acceptance check.
int cmd_oracle(const CommonOptions& o, int count, const std::string& path) {
    ScenarioConfig cfg = resolve(o);
    cfg.controller = ControllerKind::NmpcRhonn;
    cfg.identification_only = false;
    std::vector<NmpcInstance> all;
    const double start = cfg.dlc.lead_in / kmh_to_mps(cfg.v0_kmh);
    run_scenario(cfg, [&](const NmpcInstance& inst) {
        if (inst.t >= start) all.push_back(inst);
    });
    if (static_cast<int>(all.size()) < count) throw Error(ErrorKind::Config, "run too short for the requested instances");
    nlohmann::json j;
    j["plant_hash"] = plant_hash(cfg);
    j["nmpc"] = {{"q", cfg.nmpc.q}, {"r", cfg.nmpc.r}, {"dm_min", cfg.nmpc.dm_min}, {"dm_max", cfg.nmpc.dm_max}};
    for (int i = 0; i < count; ++i) {
        const NmpcInstance& s = all[static_cast<std::size_t>(i) * all.size() / count];
        auto vec = [](const Vec15& w) { return std::vector<double>(w.data(), w.data() + w.size()); };
        const RhonnModel& m = s.model;
        j["instances"].push_back({
            {"t", s.t},
            {"W_x", vec(m.W_x)},
            {"W_y", vec(m.W_y)},
            {"W_r", vec(m.W_r)},
            {"sigmoid", {{m.sig_vx.mu, m.sig_vx.beta}, {m.sig_vy.mu, m.sig_vy.beta}, {m.sig_wr.mu, m.sig_wr.beta},
                         {m.sig_delta.mu, m.sig_delta.beta}}},
            {"fixed_gain_vx", m.fixed_gain_vx},
            {"fixed_gain_wr", m.fixed_gain_wr},
            {"fixed_scale", m.fixed_scale()},
            {"x0", {s.x0.vx, s.x0.vy, s.x0.yaw_rate}},
            {"refs", {s.refs.vy, s.refs.yaw_rate, s.refs.beta}},
            {"total_torque", s.total_torque},
            {"steer", s.steer},
            {"warm", {s.warm[0], s.warm[1], s.warm[2]}},
        });
    }
    detail::open_out(path) << j.dump(1) << "\n";
    std::printf("wrote %d instances to %s\n", count, path.c_str());
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"RHONN identification and yaw-stability control workbench"};
    app.require_subcommand(1);

    CommonOptions run_o, report_o, frontier_o, oracle_o;
    bool identify = false;
    auto* run = app.add_subcommand("run", "run one scenario and write its trajectory and summary");
    add_common(run, run_o);
    run->add_flag("--identify", identify, "identification only: controller off, companion estimators on");

    std::string kind = "all";
    auto* report = app.add_subcommand("report", "estimation table and controller comparison table");
    add_common(report, report_o);
    report->add_option("--kind", kind, "estimation | comparison | all")
        ->check(CLI::IsMember({"estimation", "comparison", "all"}));

    double lo = 20.0, hi = 130.0, resolution = 0.5;
    auto* frontier = app.add_subcommand("frontier", "highest DLC entry speed kept within 1 m of the path");
    add_common(frontier, frontier_o);
    frontier->add_option("--lo", lo, "lowest speed tried, km/h");
    frontier->add_option("--hi", hi, "highest speed tried, km/h");
    frontier->add_option("--resolution", resolution, "speed lattice, km/h");

    int count = 20;
    std::string fixture = "tests/fixtures/nmpc_instances.json";
    auto* oracle = app.add_subcommand("oracle", "capture frozen NMPC instances for the solver oracle test");
    add_common(oracle, oracle_o);
    oracle->add_option("--count", count, "number of instances");
    oracle->add_option("--fixture", fixture, "output JSON path");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) return cmd_run(run_o, identify);
        if (*report) return cmd_report(report_o, kind);
        if (*frontier) return cmd_frontier(frontier_o, lo, hi, resolution);
        if (*oracle) return cmd_oracle(oracle_o, count, fixture);
    } catch (const Error& e) {
        std::fprintf(stderr, "error [%s]: %s\n", to_string(e.kind()), e.what());
        return e.kind() == ErrorKind::Config ? 2 : e.kind() == ErrorKind::Io ? 3 : 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}

#include "rhonn/harness.hpp"
#include "rhonn/io.hpp"

#include <gtest/gtest.h>

using namespace rhonn;

namespace {

ScenarioConfig straight_run(ControllerKind c) {
    ScenarioConfig cfg;
    cfg.controller = c;
    cfg.dlc.offset = 0.0;
    return cfg;
}

} // namespace

TEST(RunScenario, StraightRoadIsLaterallyQuiet) {
    const RunResult r = run_scenario(straight_run(ControllerKind::Off));
    EXPECT_TRUE(r.completed);
    EXPECT_EQ(r.metrics.max_deviation, 0.0);
    EXPECT_EQ(r.metrics.phase_area, 0.0);
    for (const TickRecord& t : r.ticks) {
        ASSERT_EQ(t.plant.vy, 0.0);
        ASSERT_EQ(t.plant.yaw_rate, 0.0);
        ASSERT_EQ(t.steer, 0.0);
        ASSERT_EQ(t.dm, 0.0);
    }
}

TEST(RunScenario, ControllersStayQuietOnAStraightRoad) {
    for (ControllerKind c : {ControllerKind::Lmpc, ControllerKind::NmpcMf, ControllerKind::NmpcRhonn}) {
        ScenarioConfig cfg = straight_run(c);
        cfg.sim.max_duration = 3.0;
        const RunResult r = run_scenario(cfg);
        EXPECT_FALSE(r.terminated) << to_string(c);
        EXPECT_LT(r.metrics.max_deviation, 1e-6) << to_string(c);
        EXPECT_EQ(r.metrics.solver_failures, 0) << to_string(c);
    }
}

TEST(RunScenario, CoastingDlcHoldsNoDriveTorque) {
    ScenarioConfig cfg;
    cfg.controller = ControllerKind::Off;
    const RunResult r = run_scenario(cfg);
    EXPECT_TRUE(r.completed);
    for (const TickRecord& t : r.ticks) ASSERT_EQ(t.total_torque, 0.0);
    EXPECT_EQ(r.ticks.front().plant.vx, kmh_to_mps(65.0));
}

TEST(RunScenario, TickSpacingAndZeroOrderHold) {
    ScenarioConfig cfg;
    cfg.sim.max_duration = 2.0;
    const RunResult r = run_scenario(cfg);
    ASSERT_EQ(r.ticks.size(), 41u);
    for (std::size_t i = 0; i < r.ticks.size(); ++i) EXPECT_NEAR(r.ticks[i].t, 0.05 * i, 1e-12);
    EXPECT_EQ(r.termination, "timeout");
    for (const TickRecord& t : r.ticks) {
        EXPECT_NEAR(t.torques[0] + t.torques[1] + t.torques[2] + t.torques[3], t.total_torque, 1e-9);
        EXPECT_GE(t.dm, cfg.nmpc.dm_min - 1e-9);
        EXPECT_LE(t.dm, cfg.nmpc.dm_max + 1e-9);
    }
}

TEST(RunScenario, PredictionsOnlyWhenAControllerRuns) {
    ScenarioConfig cfg;
    cfg.sim.max_duration = 2.0;
    for (ControllerKind c : {ControllerKind::Off, ControllerKind::Lmpc, ControllerKind::NmpcMf, ControllerKind::NmpcRhonn}) {
        cfg.controller = c;
        for (const TickRecord& t : run_scenario(cfg).ticks) {
            ASSERT_EQ(t.predicted.has_value(), c != ControllerKind::Off) << to_string(c);
        }
    }
    cfg.scenario = ScenarioKind::SlipperyCurve;
    cfg.controller = ControllerKind::Lmpc;
    cfg.sim.max_duration = 6.0;
    for (const TickRecord& t : run_scenario(cfg).ticks) ASSERT_EQ(t.predicted.has_value(), t.t >= 5.0 - 1e-9);
}

TEST(RunScenario, IdentificationRunTracksSpeedQuickly) {
    ScenarioConfig cfg;
    cfg.mu = 0.7;
    cfg.identification_only = true;
    const RunResult r = run_scenario(cfg);
    EXPECT_TRUE(r.completed);
    EXPECT_LT(r.metrics.vx_convergence_time, 1.0);
    EXPECT_LT(r.metrics.rhonn.vx.rmse, 1.0);
    ASSERT_TRUE(r.metrics.mf.has_value());
    ASSERT_TRUE(r.metrics.li.has_value());
    EXPECT_EQ(r.ekf_resets, 0);
}

TEST(RunScenario, CurveHoldsSpeed) {
    ScenarioConfig cfg;
    cfg.scenario = ScenarioKind::SlipperyCurve;
    cfg.controller = ControllerKind::Off;
    cfg.v0_kmh = 60.0;
    cfg.sim.max_duration = 10.0;
    const RunResult r = run_scenario(cfg);
    EXPECT_NEAR(mps_to_kmh(r.ticks.back().plant.vx), 60.0, 1.0);
}

TEST(RunScenario, ReplayIsBitIdentical) {
    ScenarioConfig cfg;
    cfg.sim.sensor_noise_std = 0.02;
    cfg.seed = 7;
    const RunResult a = run_scenario(cfg), b = run_scenario(cfg);
    EXPECT_EQ(trajectory_csv(a), trajectory_csv(b));
    cfg.seed = 8;
    EXPECT_NE(trajectory_csv(run_scenario(cfg)), trajectory_csv(a));
}

TEST(RunScenario, LeavingThePathTerminates) {
    ScenarioConfig cfg;
    cfg.controller = ControllerKind::Off;
    cfg.sim.abort_deviation = 0.5;
    const RunResult r = run_scenario(cfg);
    EXPECT_TRUE(r.terminated);
    EXPECT_EQ(r.termination, "off_path");
    EXPECT_FALSE(r.completed);
}

TEST(RunScenario, HookSeesEveryActiveTick) {
    ScenarioConfig cfg;
    cfg.sim.max_duration = 1.0;
    int calls = 0;
    const RunResult r = run_scenario(cfg, [&](const NmpcInstance& inst) {
        ++calls;
        EXPECT_GE(inst.command.dm, cfg.nmpc.dm_min);
    });
    EXPECT_EQ(calls, static_cast<int>(r.ticks.size()));
}

TEST(Reports, FeedThroughHasZeroError) {
    ModelTrace m{"RHONN", {0.0, 1.0, 2.0}, {{10, 1, 0.1}, {11, 1, 0.2}, {12, 0, 0.3}}, {}};
    m.estimate = m.truth;
    const std::vector<ModelTrace> traces{m};
    const auto rows = estimation_report(traces, 0.0);
    ASSERT_EQ(rows.size(), 1u);
    EXPECT_EQ(rows[0].stats.vx.max, 0.0);
    EXPECT_EQ(rows[0].stats.vy.rmse, 0.0);
    EXPECT_EQ(rows[0].stats.yaw_rate.rmse, 0.0);
}

TEST(Reports, EstimationTableHasThreeModels) {
    ScenarioConfig cfg;
    cfg.mu = 0.7;
    cfg.identification_only = true;
    cfg.sim.max_duration = 3.0;
    const RunResult r = run_scenario(cfg);
    const auto rows = estimation_report(model_traces(r), cfg.sim.warmup);
    ASSERT_EQ(rows.size(), 3u);
    EXPECT_EQ(rows[0].name, "RHONN");
    EXPECT_EQ(rows[1].name, "7DoF-MF");
    EXPECT_EQ(rows[2].name, "7DoF-LI");
    EXPECT_EQ(rows[0].stats.vx.samples, rows[2].stats.vx.samples);
}

TEST(Reports, MismatchedTracesAreRejected) {
    ModelTrace a{"A", {0.0, 1.0}, {{10, 0, 0}, {10, 0, 0}}, {{10, 0, 0}, {10, 0, 0}}};
    ModelTrace b = a;
    b.truth[1].vx = 11;
    const std::vector<ModelTrace> traces{a, b};
    try {
        estimation_report(traces, 0.0);
        FAIL() << "expected an error";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::MismatchedRuns);
    }
}

TEST(Reports, ComparisonRefusesDifferentPlants) {
    ScenarioConfig cfg;
    cfg.sim.max_duration = 0.2;
    cfg.controller = ControllerKind::Off;
    std::vector<RunResult> runs{run_scenario(cfg)};
    cfg.controller = ControllerKind::Lmpc;
    runs.push_back(run_scenario(cfg));
    EXPECT_EQ(comparison_table(runs).size(), 2u);
    cfg.mu = 0.5;
    runs.push_back(run_scenario(cfg));
    try {
        comparison_table(runs);
        FAIL() << "expected an error";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::MismatchedRuns);
    }
}

TEST(Frontier, BracketsAndBisects) {
    ScenarioConfig cfg;
    const FrontierResult f = speed_frontier(cfg, ControllerKind::Off, 20.0, 130.0, 0.5);
    EXPECT_GE(f.speed_kmh, 20.0);
    EXPECT_LT(f.speed_kmh, 130.0);
    ScenarioConfig at = cfg;
    at.controller = ControllerKind::Off;
    at.v0_kmh = f.speed_kmh;
    EXPECT_TRUE(frontier_pass(run_scenario(at), 1.0));
    at.v0_kmh = f.speed_kmh + 0.5;
    EXPECT_FALSE(frontier_pass(run_scenario(at), 1.0));
}

TEST(Frontier, CurveIsNotAFrontierScenario) {
    ScenarioConfig cfg;
    cfg.scenario = ScenarioKind::SlipperyCurve;
    EXPECT_THROW(speed_frontier(cfg, ControllerKind::Off), Error);
}

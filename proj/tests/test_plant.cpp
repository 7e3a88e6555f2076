#include "rhonn/allocation.hpp"
#include "rhonn/driver.hpp"
#include "rhonn/plant.hpp"

#include <gtest/gtest.h>

#include <cstring>

using namespace rhonn;

namespace {

TireSetup mf_tires() { return TireSetup::make(TireKind::MagicFormula, TireConfig{}); }

VehicleParams with_mu(double mu) {
    VehicleParams p;
    p.mu = mu;
    return p;
}

} // namespace

TEST(Plant, StraightRollingStaysStraight) {
    const VehicleParams p = with_mu(0.7);
    Plant plant(p, mf_tires(), rolling_start(p, 20.0));
    for (int i = 0; i < 1000; ++i) plant.step({0, 0, 0, 0}, 0.0, 0.001);
    const VehicleState& s = plant.state();
    EXPECT_EQ(s.vy, 0.0);
    EXPECT_EQ(s.yaw_rate, 0.0);
    EXPECT_EQ(s.psi, 0.0);
    EXPECT_EQ(s.Y, 0.0);
    // Drag and rolling resistance only: about 0.2 m/s^2.
    EXPECT_NEAR(s.vx, 20.0, 0.3);
    for (double w : s.w) EXPECT_NEAR(w * p.r, s.vx, 0.05);
}

TEST(Plant, SymmetricTorquesKeepTheVehicleStraight) {
    const VehicleParams p = with_mu(0.35);
    Plant plant(p, mf_tires(), rolling_start(p, 15.0));
    for (int i = 0; i < 3000; ++i) plant.step({150, 150, 150, 150}, 0.0, 0.001);
    EXPECT_EQ(plant.state().Y, 0.0);
    EXPECT_EQ(plant.state().yaw_rate, 0.0);
    EXPECT_EQ(plant.state().vy, 0.0);
    EXPECT_GT(plant.state().vx, 15.0);
}

TEST(Plant, LowSpeedCircleFollowsKinematicSteering) {
    const VehicleParams p = with_mu(1.0);
    const double v = kmh_to_mps(20.0);
    const double delta = deg_to_rad(2.0);
    Plant plant(p, mf_tires(), rolling_start(p, v));
    SpeedController speed(v, 800.0, 50.0, 4.0 * p.motor_cap);
    for (int k = 0; k < 200; ++k) {
        const TorqueVector tv = allocate(speed.update(plant.state().vx, 0.05), 0.0, p.motor_cap);
        for (int i = 0; i < 50; ++i) plant.step(tv.T, delta, 0.001);
    }
    const VehicleState& s = plant.state();
    const double kinematic = s.vx * delta / p.wheelbase();
    EXPECT_NEAR(s.yaw_rate, kinematic, 0.05 * kinematic);
}

TEST(Plant, FrictionCapHoldsAtEveryStep) {
    const VehicleParams p = with_mu(0.35);
    Plant plant(p, mf_tires(), rolling_start(p, 25.0));
    for (int i = 0; i < 4000; ++i) {
        const double t = i * 0.001;
        const double steer = 0.12 * std::sin(2.0 * kPi * 0.5 * t);
        const TorqueVector tv = allocate(200.0, 900.0 * std::sin(3.0 * t), p.motor_cap);
        plant.step(tv.T, steer, 0.001);
        const TireForces& f = plant.last_forces();
        for (int w = 0; w < 4; ++w) ASSERT_LE(std::hypot(f.fx[w], f.fy[w]), p.mu * f.fz[w] + 1e-9);
    }
}

TEST(Plant, CoastingNeverGainsEnergy) {
    const VehicleParams p = with_mu(0.7);
    VehicleState s = rolling_start(p, 22.0);
    s.vy = 0.6;
    s.yaw_rate = 0.25;
    s.w[1] *= 1.05;
    s.w[2] *= 0.95;
    Plant plant(p, mf_tires(), s);
    double e = kinetic_energy(plant.state(), p);
    for (int i = 0; i < 5000; ++i) {
        plant.step({0, 0, 0, 0}, 0.0, 0.001);
        const double next = kinetic_energy(plant.state(), p);
        ASSERT_LE(next, e * (1.0 + 1e-12)) << "step " << i;
        e = next;
    }
}

TEST(Plant, CompanionMatchesPlantOverOneTick) {
    const VehicleParams p = with_mu(0.7);
    const CompanionModel mf(p, TireKind::MagicFormula, TireConfig{}, 0.005);
    Plant plant(p, mf_tires(), rolling_start(p, kmh_to_mps(65.0)));
    double scale_vy = 0.0, scale_wr = 0.0;
    struct Sample {
        double vx, vy, wr, pvx, pvy, pwr;
    };
    std::vector<Sample> samples;
    for (int k = 0; k < 100; ++k) {
        const double delta = deg_to_rad(1.0) * std::sin(2.0 * kPi * 0.4 * k * 0.05);
        const WheelArray T{40, 40, 40, 40};
        const VehicleState pred = mf.step(plant.state(), T, delta, 0.05);
        for (int i = 0; i < 50; ++i) plant.step(T, delta, 0.001);
        const VehicleState& s = plant.state();
        samples.push_back({s.vx, s.vy, s.yaw_rate, pred.vx, pred.vy, pred.yaw_rate});
        scale_vy = std::max(scale_vy, std::abs(s.vy));
        scale_wr = std::max(scale_wr, std::abs(s.yaw_rate));
    }
    for (const Sample& x : samples) {
        EXPECT_LE(std::abs(x.pvx - x.vx), 0.02 * x.vx);
        EXPECT_LE(std::abs(x.pvy - x.vy), 0.02 * scale_vy);
        EXPECT_LE(std::abs(x.pwr - x.wr), 0.02 * scale_wr);
    }
}

TEST(Plant, BitIdenticalReplay) {
    auto run = [] {
        const VehicleParams p = with_mu(0.35);
        Plant plant(p, mf_tires(), rolling_start(p, 20.0));
        for (int i = 0; i < 3000; ++i) plant.step({50, 120, 50, 120}, 0.05 * std::sin(i * 0.003), 0.001);
        return plant.state();
    };
    const VehicleState a = run(), b = run();
    EXPECT_EQ(std::memcmp(&a, &b, sizeof a), 0);
}

TEST(Plant, RejectsStepsAboveOneMillisecond) {
    const VehicleParams p;
    try {
        integrate(rolling_start(p, 20.0), {0, 0, 0, 0}, 0.0, p, mf_tires(), 0.002);
        FAIL() << "expected an error";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Config);
    }
}

TEST(Plant, DegenerateSpeedBelowFloor) {
    const VehicleParams p;
    try {
        tire_forces_mf(rolling_start(p, 0.05), 0.0, p, TireConfig{}, static_loads(p));
        FAIL() << "expected an error";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::DegenerateSpeed);
    }
}

TEST(Plant, LoadsSumToWeight) {
    const VehicleParams p;
    for (double ax : {-3.0, 0.0, 2.0}) {
        for (double ay : {-3.0, 0.0, 3.0}) {
            const WheelArray fz = vertical_loads(p, ax, ay);
            EXPECT_NEAR(fz[0] + fz[1] + fz[2] + fz[3], p.m * kGravity, 1e-9);
        }
    }
    const WheelArray left = vertical_loads(p, 0.0, 3.0);
    EXPECT_GT(left[1], left[0]); // turning left loads the right wheels
}

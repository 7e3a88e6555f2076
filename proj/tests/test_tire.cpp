#include "rhonn/plant.hpp"
#include "rhonn/tire.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace rhonn;

namespace {

VehicleState with_slip_angle(double vx, double alpha) {
    VehicleState s;
    s.vx = vx;
    s.vy = vx * std::tan(alpha);
    s.w.fill(vx / VehicleParams{}.r);
    return s;
}

} // namespace

TEST(MagicFormula, ZeroSlipZeroForce) {
    const TireConfig tc;
    const SlipPeaks peaks = SlipPeaks::of(tc);
    const WheelForce c = combined_mf(tc, peaks, 0.0, 0.0, 0.7, 4000.0);
    EXPECT_EQ(c.fx, 0.0);
    EXPECT_EQ(c.fy, 0.0);
    const WheelForce p = pure_mf(tc, 0.0, 0.0, 0.7, 4000.0);
    EXPECT_EQ(p.fx, 0.0);
    EXPECT_EQ(p.fy, 0.0);

    const VehicleParams vp;
    const TireForces f = tire_forces_mf(rolling_start(vp, 20.0), 0.0, vp, tc, static_loads(vp));
    for (int i = 0; i < 4; ++i) {
        EXPECT_EQ(f.fx[i], 0.0);
        EXPECT_EQ(f.fy[i], 0.0);
    }
}

TEST(MagicFormula, OriginSlopeIsBCD) {
    const MagicFormula mf{10.0, 1.9, 0.97};
    const double D = 0.7 * 4000.0;
    const double h = 1e-6;
    const double fd = (mf.force(h, D) - mf.force(-h, D)) / (2.0 * h);
    EXPECT_NEAR(fd, mf.origin_slope(D), 0.01 * mf.origin_slope(D));
    EXPECT_DOUBLE_EQ(mf.origin_slope(D), 10.0 * 1.9 * D);
}

TEST(MagicFormula, OddInSlip) {
    const MagicFormula mf{12.0, 1.65, 0.6};
    for (double s = 0.01; s < 1.0; s += 0.07) EXPECT_DOUBLE_EQ(mf.force(-s, 1000.0), -mf.force(s, 1000.0));
}

TEST(MagicFormula, PeakSlipIsTheMaximum) {
    for (const MagicFormula mf : {MagicFormula{10.0, 1.9, 0.97}, MagicFormula{12.0, 1.65, 0.6}}) {
        const double s = mf.peak_slip();
        EXPECT_NEAR(mf.force(s, 1.0), 1.0, 1e-12);
        EXPECT_LE(mf.force(s * 0.9, 1.0), mf.force(s, 1.0));
        EXPECT_LE(mf.force(s * 1.1, 1.0), mf.force(s, 1.0));
    }
}

TEST(MagicFormula, LateralSaturationNeverExceedsGrip) {
    const TireConfig tc;
    const SlipPeaks peaks = SlipPeaks::of(tc);
    const double mu = 0.35, fz = 5000.0;
    double peak = 0.0;
    for (double deg = -30.0; deg <= 30.0; deg += 0.05) {
        const WheelForce f = combined_mf(tc, peaks, 0.0, deg_to_rad(deg), mu, fz);
        EXPECT_LE(std::abs(f.fy), mu * fz + 1e-9);
        peak = std::max(peak, std::abs(f.fy));
    }
    EXPECT_GT(peak, 0.99 * mu * fz);
}

TEST(MagicFormula, CombinedSlipRespectsFrictionCircle) {
    const TireConfig tc;
    const SlipPeaks peaks = SlipPeaks::of(tc);
    std::mt19937_64 rng(29);
    std::uniform_real_distribution<double> kappa(-1.0, 1.0), alpha(-0.6, 0.6), mu(0.1, 1.2), fz(0.0, 9000.0);
    for (int i = 0; i < 20000; ++i) {
        const double m = mu(rng), z = fz(rng);
        const WheelForce f = combined_mf(tc, peaks, kappa(rng), alpha(rng), m, z);
        ASSERT_LE(std::hypot(f.fx, f.fy), m * z + 1e-9);
    }
}

TEST(MagicFormula, CombinedReducesToPureOnEachAxis) {
    const TireConfig tc;
    const SlipPeaks peaks = SlipPeaks::of(tc);
    for (double a = -0.3; a <= 0.3; a += 0.01) {
        const WheelForce c = combined_mf(tc, peaks, 0.0, a, 0.7, 4000.0);
        EXPECT_NEAR(c.fy, pure_mf(tc, 0.0, a, 0.7, 4000.0).fy, 1e-9);
    }
    for (double k = -0.5; k <= 0.5; k += 0.01) {
        const WheelForce c = combined_mf(tc, peaks, k, 0.0, 0.7, 4000.0);
        EXPECT_NEAR(c.fx, pure_mf(tc, k, 0.0, 0.7, 4000.0).fx, 1e-9);
    }
}

TEST(MagicFormula, PositiveSlipAngleGivesRightwardForce) {
    const TireConfig tc;
    EXPECT_LT(combined_mf(tc, SlipPeaks::of(tc), 0.0, 0.02, 0.7, 4000.0).fy, 0.0);
    EXPECT_GT(combined_mf(tc, SlipPeaks::of(tc), 0.05, 0.0, 0.7, 4000.0).fx, 0.0);
}

TEST(LinearTire, FrontAxleForceFromTableStiffness) {
    const VehicleParams vp;
    const TireForces f = tire_forces_linear(with_slip_angle(20.0, 0.01), 0.0, vp, TireConfig{}, static_loads(vp));
    EXPECT_NEAR(f.alpha[0], 0.01, 1e-15);
    EXPECT_NEAR(f.fy[0] + f.fy[1], -1083.5, 1e-6);
}

TEST(LinearTire, ZeroSlipZeroForce) {
    const VehicleParams vp;
    const TireForces f = tire_forces_linear(rolling_start(vp, 20.0), 0.0, vp, TireConfig{}, static_loads(vp));
    for (int i = 0; i < 4; ++i) {
        EXPECT_EQ(f.fx[i], 0.0);
        EXPECT_EQ(f.fy[i], 0.0);
    }
}

TEST(LinearTire, SaturatesAtGrip) {
    const WheelForce f = linear_tire(-50000.0, 60000.0, 0.5, 0.3, 0.35, 4000.0);
    EXPECT_DOUBLE_EQ(f.fy, -0.35 * 4000.0);
    EXPECT_DOUBLE_EQ(f.fx, 0.35 * 4000.0);
}

TEST(LinearTire, AgreesWithMagicFormulaAtSmallSlip) {
    const TireConfig tc;
    const double mu = 0.7, fz = 4500.0;
    const double stiffness = -tc.lateral.origin_slope(mu * fz);
    for (double deg = -1.0; deg <= 1.0; deg += 0.05) {
        if (std::abs(deg) < 1e-9) continue;
        const double a = deg_to_rad(deg);
        const double mf = pure_mf(tc, 0.0, a, mu, fz).fy;
        const double li = linear_tire(stiffness, 1.0, 0.0, a, mu, fz).fy;
        EXPECT_LE(std::abs(li - mf), 0.15 * std::abs(mf)) << deg << " deg";
    }
}

TEST(TireConfig, RejectsOutOfRangeShape) {
    TireConfig tc;
    tc.lateral.C = 2.5;
    EXPECT_THROW(tc.validate(), Error);
}

#pragma once

// Reference implementations used only by the tests. They deliberately share no code
// with the library beyond plain data types.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <vector>

namespace oracle {

/// All non-empty subsets of {0,1,2,3}, ordered by size and then lexicographically.
inline std::vector<std::vector<int>> basis_subsets() {
    std::vector<std::vector<int>> out;
    for (int size = 1; size <= 4; ++size) {
        for (int mask = 1; mask < 16; ++mask) {
            std::vector<int> s;
            for (int i = 0; i < 4; ++i) {
                if (mask & (1 << i)) s.push_back(i);
            }
            if (static_cast<int>(s.size()) == size) out.push_back(s);
        }
        std::stable_sort(out.end() - std::count_if(out.begin(), out.end(),
                                                   [&](const auto& v) { return static_cast<int>(v.size()) == size; }),
                         out.end());
    }
    return out;
}

inline std::vector<double> basis(const std::array<double, 4>& xi) {
    std::vector<double> out;
    for (const auto& s : basis_subsets()) {
        double p = 1.0;
        for (int i : s) p *= xi[i];
        out.push_back(p);
    }
    return out;
}

/// Textbook scalar Kalman filter on a random-walk state observed through gain h.
struct ScalarKalman {
    double x, p, q, r;

    void update(double z, double h) {
        const double s = h * p * h + r;
        const double k = p * h / s;
        x = x + k * (z - h * x);
        p = (1.0 - k * h) * p + q;
    }
};

/// EKF weight update written with an explicit inverse on dynamic matrices.
struct EkfStep {
    Eigen::VectorXd W;
    Eigen::MatrixXd P;
};

inline EkfStep ekf_step(const Eigen::VectorXd& W, const Eigen::MatrixXd& P, const Eigen::MatrixXd& Q, double R,
                        double zeta, double e, const Eigen::VectorXd& H) {
    Eigen::MatrixXd S(1, 1);
    S(0, 0) = R;
    S += H.transpose() * P * H;
    const Eigen::MatrixXd K = P * H * S.inverse();
    EkfStep out;
    out.W = W + zeta * K.col(0) * e;
    out.P = P - K * H.transpose() * P + Q;
    out.P = 0.5 * (out.P + out.P.transpose());
    return out;
}

/// Independent RHONN one-step map for the dense-grid NMPC oracle.
struct Net {
    std::array<std::vector<double>, 3> W;  // V_x, V_y, yaw-rate neurons
    std::array<double, 4> mu{}, beta{};    // sigmoid parameters per channel
    double gain_vx = 0.0, gain_wr = 0.0;   // fixed-term gains including any dt factor

    std::array<double, 3> step(const std::array<double, 3>& x, double total_torque, double dm, double steer) const {
        const std::array<double, 4> in{x[0], x[1], x[2], steer};
        std::array<double, 4> xi{};
        for (int i = 0; i < 4; ++i) xi[i] = mu[i] * std::tanh(beta[i] * in[i]);
        const std::vector<double> phi = basis(xi);
        std::array<double, 3> out{};
        for (int n = 0; n < 3; ++n) {
            for (std::size_t j = 0; j < phi.size(); ++j) out[n] += W[n][j] * phi[j];
        }
        out[0] += gain_vx * total_torque;
        out[2] += gain_wr * dm;
        return out;
    }
};

struct GridResult {
    double cost = std::numeric_limits<double>::infinity();
    std::array<double, 3> dm{};
};

/// Exhaustive minimum of the horizon-3 tracking cost over an n^3 lattice of the dM box.
/// The last move only enters the final yaw-rate prediction through the fixed gain,
/// so the innermost loop reuses the state computed for the first two moves.
inline GridResult nmpc_grid(const Net& net, const std::array<double, 3>& x0, double wr_ref, double beta_ref,
                            double total_torque, double steer, const std::array<double, 3>& q,
                            const std::array<double, 3>& r, double lo, double hi, int n = 201) {
    auto beta_of = [](const std::array<double, 3>& x) { return x[1] / std::max(x[0], 0.5); };
    auto stage = [&](int i, const std::array<double, 3>& x) {
        const double ew = wr_ref - x[2];
        const double eb = beta_ref - beta_of(x);
        return q[i] * ew * ew + r[i] * eb * eb;
    };
    GridResult best;
    const double h = (hi - lo) / (n - 1);
    for (int a = 0; a < n; ++a) {
        const double d0 = lo + a * h;
        const auto x1 = net.step(x0, total_torque, d0, steer);
        const double j1 = stage(0, x1);
        for (int b = 0; b < n; ++b) {
            const double d1 = lo + b * h;
            const auto x2 = net.step(x1, total_torque, d1, steer);
            const double j2 = j1 + stage(1, x2);
            const auto x3 = net.step(x2, total_torque, 0.0, steer);
            for (int c = 0; c < n; ++c) {
                const double d2 = lo + c * h;
                std::array<double, 3> x = x3;
                x[2] += net.gain_wr * d2;
                const double J = j2 + stage(2, x);
                if (J < best.cost) best = {J, {d0, d1, d2}};
            }
        }
    }
    return best;
}

/// Forward-Euler 2-DoF bicycle with linear axle forces; returns the settled (V_y, yaw rate).
inline std::array<double, 2> bicycle_settled(double m, double Iz, double lf, double lr, double Cf, double Cr, double vx,
                                             double delta_f, double dt = 1e-4, double duration = 20.0) {
    double vy = 0.0, wr = 0.0;
    const int n = static_cast<int>(duration / dt);
    for (int i = 0; i < n; ++i) {
        const double af = (vy + lf * wr) / vx - delta_f;
        const double ar = (vy - lr * wr) / vx;
        const double fyf = Cf * af, fyr = Cr * ar; // C < 0 so the force opposes the slip
        const double dvy = (fyf + fyr) / m - vx * wr;
        const double dwr = (lf * fyf - lr * fyr) / Iz;
        vy += dt * dvy;
        wr += dt * dwr;
    }
    return {vy, wr};
}

inline double bicycle_settled_yaw_rate(double m, double Iz, double lf, double lr, double Cf, double Cr, double vx,
                                       double delta_f) {
    return bicycle_settled(m, Iz, lf, lr, Cf, Cr, vx, delta_f)[1];
}

/// Fixed point of x' = A x + b in two dimensions.
inline Eigen::Vector2d affine_fixed_point(const Eigen::Matrix2d& A, const Eigen::Vector2d& b) {
    return (Eigen::Matrix2d::Identity() - A).inverse() * b;
}

} // namespace oracle

#pragma once

// Steady-state lateral targets: the (V_y, yaw rate) equilibrium of the identified
// one-step map that lies nearest to the previous operating point.

#include "rhonn/rhonn_core.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <utility>

namespace rhonn {

struct LateralPoint {
    double vy = 0.0;
    double yaw_rate = 0.0;
};

struct ReferenceTargets {
    double vy = 0.0;       // V_yd, m/s
    double yaw_rate = 0.0; // omega_rd, rad/s
    double beta = 0.0;     // beta_d, rad
};

struct SearchBox {
    double vy_min = -4.0;
    double vy_max = 4.0;
    double wr_min = -1.0;
    double wr_max = 1.0;

    bool contains(const LateralPoint& p) const {
        return p.vy >= vy_min && p.vy <= vy_max && p.yaw_rate >= wr_min && p.yaw_rate <= wr_max;
    }
};

struct SearchConfig {
    LateralPoint r0{0.2, 0.02};     // initial radius
    LateralPoint dr{0.2, 0.02};     // radius increment
    LateralPoint grid{0.05, 0.005}; // discretization interval
    double eps = 1e-3;              // cost threshold
    double eta = 10.0;
    double vy_limit = 4.0;          // |V_yd| bound, m/s
    double yaw_limit_factor = 0.85; // |omega_rd| <= factor * mu * g / V_x

    void validate() const {
        if (!(r0.vy > 0 && r0.yaw_rate > 0 && dr.vy > 0 && dr.yaw_rate > 0 && grid.vy > 0 && grid.yaw_rate > 0 &&
              eps > 0 && eta > 0 && vy_limit > 0 && yaw_limit_factor > 0)) {
            throw Error(ErrorKind::Config, "search parameters must be positive");
        }
        if (!(grid.vy < r0.vy && grid.yaw_rate < r0.yaw_rate)) {
            throw Error(ErrorKind::Config, "grid interval must be smaller than the initial radius");
        }
    }

    SearchBox box(double mu, double vx) const {
        const double wr = yaw_limit_factor * mu * kGravity / std::max(vx, 0.5);
        return {-vy_limit, vy_limit, -wr, wr};
    }
};

struct SearchResult {
    ReferenceTargets targets;
    LateralPoint point;
    double cost = 0.0;
    LateralPoint final_radius;
    int evaluated = 0;
    int passes = 0;
    bool converged = false;
};

/// |V_y' - V_y| + eta |omega' - omega| for a map returning the next (V_y, omega).
template <class Map>
double equilibrium_cost(const LateralPoint& c, const Map& map, double eta) {
    const LateralPoint next = map(c);
    const double cost = std::abs(next.vy - c.vy) + eta * std::abs(next.yaw_rate - c.yaw_rate);
    if (!std::isfinite(cost)) throw Error(ErrorKind::NonFinite, "equilibrium cost is not finite");
    return cost;
}

/// One RHONN step from (V_x held, candidate V_y, candidate omega) under frozen inputs with dM = 0.
struct RhonnLateralMap {
    const RhonnModel* model;
    double vx;
    double steer;

    LateralPoint operator()(const LateralPoint& c) const {
        const Vec15 phi = basis_at(*model, {vx, c.vy, c.yaw_rate}, steer);
        return {model->W_y.dot(phi), model->W_r.dot(phi)};
    }
};

inline double equilibrium_cost(const LateralPoint& c, const RhonnModel& model, double vx, double steer, double eta) {
    return equilibrium_cost(c, RhonnLateralMap{&model, vx, steer}, eta);
}

inline double desired_sideslip(double vy_d, double vx) {
    if (!(vx > 0.5)) throw Error(ErrorKind::LowSpeed, "V_x below 0.5 m/s");
    return vy_d / vx;
}

/// Expanding-radius grid search. Each pass evaluates the grid points of the rectangular
/// neighborhood that were not covered by the previous pass; the first pass whose
/// best cost is within `eps` wins. When the neighborhood already covers the box the
/// best point seen so far is returned with converged = false.
template <class Map>
SearchResult neighbors_search(const LateralPoint& prev, const SearchConfig& cfg, const SearchBox& box,
                              const Map& map) {
    if (!std::isfinite(prev.vy) || !std::isfinite(prev.yaw_rate)) {
        throw Error(ErrorKind::NonFinite, "previous operating point is not finite");
    }
    // Radius that reaches both box edges from the center, per axis.
    const double need_vy = std::max(std::abs(prev.vy - box.vy_min), std::abs(box.vy_max - prev.vy));
    const double need_wr = std::max(std::abs(prev.yaw_rate - box.wr_min), std::abs(box.wr_max - prev.yaw_rate));

    SearchResult res;
    double best = std::numeric_limits<double>::infinity();
    LateralPoint best_pt = prev;
    LateralPoint radius = cfg.r0;
    int prev_ni = -1, prev_nj = -1; // previous pass covered |i| <= prev_ni and |j| <= prev_nj

    while (true) {
        const int ni = static_cast<int>(std::floor(radius.vy / cfg.grid.vy + 1e-9));
        const int nj = static_cast<int>(std::floor(radius.yaw_rate / cfg.grid.yaw_rate + 1e-9));
        double pass_best = std::numeric_limits<double>::infinity();
        LateralPoint pass_pt{};
        for (int i = -ni; i <= ni; ++i) {
            for (int j = -nj; j <= nj; ++j) {
                if (std::abs(i) <= prev_ni && std::abs(j) <= prev_nj) continue;
                const LateralPoint c{prev.vy + i * cfg.grid.vy, prev.yaw_rate + j * cfg.grid.yaw_rate};
                if (!box.contains(c)) continue;
                const double cost = equilibrium_cost(c, map, cfg.eta);
                ++res.evaluated;
                if (cost < pass_best) {
                    pass_best = cost;
                    pass_pt = c;
                }
            }
        }
        ++res.passes;
        res.final_radius = radius;
        if (pass_best < best) {
            best = pass_best;
            best_pt = pass_pt;
        }
        if (pass_best <= cfg.eps) {
            res.converged = true;
            break;
        }
        const bool covers = radius.vy >= need_vy && radius.yaw_rate >= need_wr;
        if (covers) break;
        prev_ni = ni;
        prev_nj = nj;
        radius.vy += cfg.dr.vy;
        radius.yaw_rate += cfg.dr.yaw_rate;
    }
    if (!std::isfinite(best)) throw Error(ErrorKind::EmptyFeasibleSet, "no grid point inside the box limits");
    res.point = best_pt;
    res.cost = best;
    res.targets.vy = best_pt.vy;
    res.targets.yaw_rate = best_pt.yaw_rate;
    return res;
}

/// RHONN targets for the current tick, with beta_d from the current V_x estimate.
inline SearchResult rhonn_references(const LateralPoint& prev, const SearchConfig& cfg, const RhonnModel& model,
                                     double vx, double steer, double mu) {
    SearchResult out = neighbors_search(prev, cfg, cfg.box(mu, vx), RhonnLateralMap{&model, vx, steer});
    out.targets.beta = desired_sideslip(out.targets.vy, vx);
    return out;
}

} // namespace rhonn

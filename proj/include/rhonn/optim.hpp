#pragma once

// Small derivative-free and quadratic solvers for box-constrained problems.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <vector>

namespace rhonn {

template <int N>
using VecN = Eigen::Matrix<double, N, 1>;

template <int N>
struct BoxResult {
    VecN<N> x = VecN<N>::Zero();
    double f = std::numeric_limits<double>::infinity();
    int evaluations = 0;
};

template <int N>
VecN<N> clamp_box(const VecN<N>& x, const VecN<N>& lo, const VecN<N>& hi) {
    return x.cwiseMax(lo).cwiseMin(hi);
}

struct NelderMeadOptions {
    int max_evaluations = 400;
    double initial_step = 0.25; // fraction of the box width
    double f_tol = 1e-12;
    double x_tol = 1e-6;        // fraction of the box width
};

/// Nelder-Mead with every trial point projected onto the box.
template <int N, class F>
BoxResult<N> nelder_mead_box(const F& f, const VecN<N>& lo, const VecN<N>& hi, const VecN<N>& x0,
                             const NelderMeadOptions& opt = {}) {
    BoxResult<N> res;
    const VecN<N> width = hi - lo;
    auto eval = [&](const VecN<N>& x) {
        ++res.evaluations;
        return f(x);
    };

    std::array<VecN<N>, N + 1> simplex;
    std::array<double, N + 1> fv;
    simplex[0] = clamp_box<N>(x0, lo, hi);
    for (int i = 0; i < N; ++i) {
        VecN<N> v = simplex[0];
        const double step = opt.initial_step * width[i];
        v[i] = (v[i] + step <= hi[i]) ? v[i] + step : v[i] - step;
        simplex[i + 1] = clamp_box<N>(v, lo, hi);
    }
    for (int i = 0; i <= N; ++i) fv[i] = eval(simplex[i]);

    std::array<int, N + 1> order;
    while (res.evaluations < opt.max_evaluations) {
        for (int i = 0; i <= N; ++i) order[i] = i;
        std::sort(order.begin(), order.end(), [&](int a, int b) { return fv[a] < fv[b]; });
        const int best = order[0], worst = order[N], second = order[N - 1];

        double spread = 0.0;
        for (int i = 1; i <= N; ++i) {
            spread = std::max(spread, ((simplex[order[i]] - simplex[best]).cwiseQuotient(width)).cwiseAbs().maxCoeff());
        }
        if (std::abs(fv[worst] - fv[best]) <= opt.f_tol * (1.0 + std::abs(fv[best])) && spread <= opt.x_tol) break;
        if (spread <= opt.x_tol * 1e-3) break;

        VecN<N> centroid = VecN<N>::Zero();
        for (int i = 0; i < N; ++i) centroid += simplex[order[i]];
        centroid /= N;

        const VecN<N> xr = clamp_box<N>(centroid + (centroid - simplex[worst]), lo, hi);
        const double fr = eval(xr);
        if (fr < fv[best]) {
            const VecN<N> xe = clamp_box<N>(centroid + 2.0 * (centroid - simplex[worst]), lo, hi);
            const double fe = eval(xe);
            if (fe < fr) {
                simplex[worst] = xe;
                fv[worst] = fe;
            } else {
                simplex[worst] = xr;
                fv[worst] = fr;
            }
            continue;
        }
        if (fr < fv[second]) {
            simplex[worst] = xr;
            fv[worst] = fr;
            continue;
        }
        const bool outside = fr < fv[worst];
        const VecN<N> xc = outside ? clamp_box<N>(centroid + 0.5 * (xr - centroid), lo, hi)
                                   : clamp_box<N>(centroid + 0.5 * (simplex[worst] - centroid), lo, hi);
        const double fc = eval(xc);
        if (fc < std::min(fr, fv[worst])) {
            simplex[worst] = xc;
            fv[worst] = fc;
            continue;
        }
        for (int i = 1; i <= N; ++i) {
            const int k = order[i];
            simplex[k] = simplex[best] + 0.5 * (simplex[k] - simplex[best]);
            fv[k] = eval(simplex[k]);
        }
    }
    int best = 0;
    for (int i = 1; i <= N; ++i) {
        if (fv[i] < fv[best]) best = i;
    }
    res.x = simplex[best];
    res.f = fv[best];
    return res;
}

/// Cyclic coordinate pattern search with step halving; never returns a worse point.
template <int N, class F>
BoxResult<N> coordinate_polish(const F& f, const VecN<N>& lo, const VecN<N>& hi, BoxResult<N> start,
                               double initial_fraction = 0.05, double min_fraction = 1e-7, int max_evaluations = 300) {
    const VecN<N> width = hi - lo;
    double frac = initial_fraction;
    int evals = 0;
    while (frac >= min_fraction && evals < max_evaluations) {
        bool improved = false;
        for (int i = 0; i < N; ++i) {
            for (double dir : {1.0, -1.0}) {
                VecN<N> x = start.x;
                x[i] = std::clamp(x[i] + dir * frac * width[i], lo[i], hi[i]);
                if (x[i] == start.x[i]) continue;
                const double fx = f(x);
                ++evals;
                if (fx < start.f) {
                    start.x = x;
                    start.f = fx;
                    improved = true;
                    break;
                }
            }
        }
        if (!improved) frac *= 0.5;
    }
    start.evaluations += evals;
    return start;
}

/// Multi-start projected Nelder-Mead followed by a coordinate polish.
template <int N, class F>
BoxResult<N> minimize_box(const F& f, const VecN<N>& lo, const VecN<N>& hi, const std::vector<VecN<N>>& starts,
                          const NelderMeadOptions& opt = {}) {
    BoxResult<N> best;
    int evaluations = 0;
    for (const VecN<N>& s : starts) {
        const BoxResult<N> r = nelder_mead_box<N>(f, lo, hi, s, opt);
        evaluations += r.evaluations;
        if (r.f < best.f) best = r;
    }
    best.evaluations = 0;
    best = coordinate_polish<N>(f, lo, hi, best);
    best.evaluations += evaluations;
    return best;
}

/// Exact minimizer of 0.5 x'Hx + g'x over a box for small N (H positive definite),
/// by enumerating every free / lower / upper assignment and keeping the best feasible one.
template <int N>
VecN<N> box_qp(const Eigen::Matrix<double, N, N>& H, const VecN<N>& g, const VecN<N>& lo, const VecN<N>& hi) {
    VecN<N> best_x = clamp_box<N>(VecN<N>::Zero(), lo, hi);
    double best_f = std::numeric_limits<double>::infinity();
    int combos = 1;
    for (int i = 0; i < N; ++i) combos *= 3;
    for (int code = 0; code < combos; ++code) {
        std::array<int, N> state;
        int c = code;
        for (int i = 0; i < N; ++i) {
            state[i] = c % 3; // 0 free, 1 lower, 2 upper
            c /= 3;
        }
        VecN<N> x = VecN<N>::Zero();
        std::vector<int> free_idx;
        for (int i = 0; i < N; ++i) {
            if (state[i] == 1) x[i] = lo[i];
            else if (state[i] == 2) x[i] = hi[i];
            else free_idx.push_back(i);
        }
        if (!free_idx.empty()) {
            const int nf = static_cast<int>(free_idx.size());
            Eigen::MatrixXd Hf(nf, nf);
            Eigen::VectorXd rhs(nf);
            for (int a = 0; a < nf; ++a) {
                rhs[a] = -g[free_idx[a]];
                for (int i = 0; i < N; ++i) {
                    if (state[i] != 0) rhs[a] -= H(free_idx[a], i) * x[i];
                }
                for (int b = 0; b < nf; ++b) Hf(a, b) = H(free_idx[a], free_idx[b]);
            }
            const Eigen::VectorXd xf = Hf.ldlt().solve(rhs);
            bool feasible = xf.allFinite();
            for (int a = 0; a < nf && feasible; ++a) {
                const int i = free_idx[a];
                if (xf[a] < lo[i] - 1e-12 || xf[a] > hi[i] + 1e-12) feasible = false;
                x[i] = std::clamp(xf[a], lo[i], hi[i]);
            }
            if (!feasible) continue;
        }
        const double fx = 0.5 * x.dot(H * x) + g.dot(x);
        if (fx < best_f) {
            best_f = fx;
            best_x = x;
        }
    }
    return best_x;
}

} // namespace rhonn

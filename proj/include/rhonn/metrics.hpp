#pragma once

#include "rhonn/types.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <utility>
#include <vector>

namespace rhonn {

/// Min / max / RMSE of the absolute error.
struct ErrorStats {
    double min = 0.0;
    double max = 0.0;
    double rmse = 0.0;
    std::size_t samples = 0;
};

inline ErrorStats error_stats(std::span<const double> truth, std::span<const double> estimate) {
    ErrorStats s;
    const std::size_t n = std::min(truth.size(), estimate.size());
    if (n == 0) return s;
    s.min = std::numeric_limits<double>::infinity();
    double sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double e = std::abs(truth[i] - estimate[i]);
        s.min = std::min(s.min, e);
        s.max = std::max(s.max, e);
        sq += e * e;
    }
    s.rmse = std::sqrt(sq / static_cast<double>(n));
    s.samples = n;
    return s;
}

struct Point2 {
    double x = 0.0;
    double y = 0.0;
};

/// Andrew's monotone chain; returns the hull counter-clockwise without repeating the first point.
inline std::vector<Point2> convex_hull(std::vector<Point2> pts) {
    std::sort(pts.begin(), pts.end(), [](const Point2& a, const Point2& b) { return a.x < b.x || (a.x == b.x && a.y < b.y); });
    pts.erase(std::unique(pts.begin(), pts.end(), [](const Point2& a, const Point2& b) { return a.x == b.x && a.y == b.y; }),
              pts.end());
    if (pts.size() < 3) return pts;
    auto cross = [](const Point2& o, const Point2& a, const Point2& b) {
        return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
    };
    std::vector<Point2> hull(2 * pts.size());
    std::size_t k = 0;
    for (const Point2& p : pts) {
        while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0) --k;
        hull[k++] = p;
    }
    for (std::size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
        while (k >= t && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
        hull[k++] = pts[i];
    }
    hull.resize(k - 1);
    return hull;
}

inline double polygon_area(const std::vector<Point2>& poly) {
    if (poly.size() < 3) return 0.0;
    double a = 0.0;
    for (std::size_t i = 0; i < poly.size(); ++i) {
        const Point2& p = poly[i];
        const Point2& q = poly[(i + 1) % poly.size()];
        a += p.x * q.y - q.x * p.y;
    }
    return 0.5 * std::abs(a);
}

/// Convex-hull area of a point cloud; collinear or tiny sets give 0.
inline double hull_area(const std::vector<Point2>& pts) { return polygon_area(convex_hull(pts)); }

/// (beta, beta_dot) phase points from a uniformly sampled beta trace (central differences).
inline std::vector<Point2> phase_points(std::span<const double> beta, double dt) {
    std::vector<Point2> pts;
    if (beta.size() < 3) return pts;
    for (std::size_t i = 1; i + 1 < beta.size(); ++i) {
        pts.push_back({beta[i], (beta[i + 1] - beta[i - 1]) / (2.0 * dt)});
    }
    return pts;
}

/// Area enclosed by the beta / beta_dot trajectory, measured as its convex hull.
inline double phase_area(std::span<const double> beta, double dt) {
    if (beta.size() < 3) throw Error(ErrorKind::Config, "phase area needs at least 3 samples");
    return hull_area(phase_points(beta, dt));
}

} // namespace rhonn

#pragma once

#include "rhonn/types.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace rhonn {

struct PathPoint {
    double X = 0.0;
    double Y = 0.0;
    double s = 0.0; // arc length
};

class Path {
public:
    Path() = default;
    explicit Path(std::vector<PathPoint> pts) : pts_(std::move(pts)) {
        for (std::size_t i = 1; i < pts_.size(); ++i) {
            pts_[i].s = pts_[i - 1].s + std::hypot(pts_[i].X - pts_[i - 1].X, pts_[i].Y - pts_[i - 1].Y);
        }
    }

    const std::vector<PathPoint>& points() const { return pts_; }
    double length() const { return pts_.empty() ? 0.0 : pts_.back().s; }

    struct Projection {
        double s = 0.0;
        double lateral = 0.0; // signed, positive when the query point is left of the path
        std::size_t segment = 0;
    };

    Projection project(double X, double Y) const {
        Projection best;
        double best_d2 = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i + 1 < pts_.size(); ++i) {
            const PathPoint& a = pts_[i];
            const PathPoint& b = pts_[i + 1];
            const double ex = b.X - a.X, ey = b.Y - a.Y;
            const double len2 = ex * ex + ey * ey;
            if (len2 <= 0.0) continue;
            const double t = std::clamp(((X - a.X) * ex + (Y - a.Y) * ey) / len2, 0.0, 1.0);
            const double px = a.X + t * ex, py = a.Y + t * ey;
            const double d2 = (X - px) * (X - px) + (Y - py) * (Y - py);
            if (d2 < best_d2) {
                best_d2 = d2;
                const double len = std::sqrt(len2);
                best.s = a.s + t * len;
                best.lateral = (ex * (Y - a.Y) - ey * (X - a.X)) / len;
                best.segment = i;
            }
        }
        return best;
    }

    PathPoint at(double s) const {
        if (pts_.empty()) return {};
        if (s <= 0.0) return pts_.front();
        if (s >= length()) return pts_.back();
        auto it = std::lower_bound(pts_.begin(), pts_.end(), s,
                                   [](const PathPoint& p, double v) { return p.s < v; });
        const PathPoint& b = *it;
        const PathPoint& a = *(it - 1);
        const double t = (s - a.s) / (b.s - a.s);
        return {a.X + t * (b.X - a.X), a.Y + t * (b.Y - a.Y), s};
    }

private:
    std::vector<PathPoint> pts_;
};

enum class ScenarioKind { DoubleLaneChange, SlipperyCurve };

/// Section lengths of the double lane change, in meters along X.
struct DlcGeometry {
    double lead_in = 40.0;
    double entry = 12.0;
    double lane_change = 13.5;
    double offset_lane = 11.0;
    double lane_return = 12.5;
    double exit = 12.0;
    double run_out = 150.0;
    double offset = 3.5;
    double spacing = 0.25;

    double total() const { return lead_in + entry + lane_change + offset_lane + lane_return + exit + run_out; }
};

struct CurveGeometry {
    double lead_in = 120.0;
    double radius = 200.0;
    double arc_angle = deg_to_rad(150.0);
    double run_out = 150.0;
    double spacing = 0.25;
};

/// Cosine-blended double lane change to the left and back.
inline Path dlc_path(const DlcGeometry& g) {
    std::vector<PathPoint> pts;
    const double x1 = g.lead_in + g.entry;
    const double x2 = x1 + g.lane_change;
    const double x3 = x2 + g.offset_lane;
    const double x4 = x3 + g.lane_return;
    const double end = g.total();
    const int n = static_cast<int>(std::ceil(end / g.spacing));
    for (int i = 0; i <= n; ++i) {
        const double x = std::min(end, i * g.spacing);
        double y = 0.0;
        if (x > x1 && x < x2) {
            y = 0.5 * g.offset * (1.0 - std::cos(kPi * (x - x1) / g.lane_change));
        } else if (x >= x2 && x <= x3) {
            y = g.offset;
        } else if (x > x3 && x < x4) {
            y = 0.5 * g.offset * (1.0 + std::cos(kPi * (x - x3) / g.lane_return));
        }
        pts.push_back({x, y, 0.0});
    }
    return Path(std::move(pts));
}

/// Straight lead-in followed by a left-hand arc of constant radius and a tangent run-out.
inline Path curve_path(const CurveGeometry& g) {
    std::vector<PathPoint> pts;
    for (double x = 0.0; x < g.lead_in; x += g.spacing) pts.push_back({x, 0.0, 0.0});
    const int n_arc = static_cast<int>(std::ceil(g.radius * g.arc_angle / g.spacing));
    for (int i = 0; i <= n_arc; ++i) {
        const double th = g.arc_angle * i / n_arc;
        pts.push_back({g.lead_in + g.radius * std::sin(th), g.radius * (1.0 - std::cos(th)), 0.0});
    }
    const PathPoint end = pts.back();
    const int n_out = static_cast<int>(std::ceil(g.run_out / g.spacing));
    for (int i = 1; i <= n_out; ++i) {
        const double d = i * g.spacing;
        pts.push_back({end.X + d * std::cos(g.arc_angle), end.Y + d * std::sin(g.arc_angle), 0.0});
    }
    return Path(std::move(pts));
}

inline Path scenario_path(ScenarioKind kind, const DlcGeometry& dlc = {}, const CurveGeometry& curve = {}) {
    return kind == ScenarioKind::DoubleLaneChange ? dlc_path(dlc) : curve_path(curve);
}

struct DriverConfig {
    double preview_time = 0.6;        // s
    double min_preview = 4.0;         // m
    double max_wheel_angle = deg_to_rad(500.0);
    double speed_kp = 800.0;          // N m per m/s
    double speed_ki = 50.0;           // N m per m
};

/// Pure-pursuit steering-wheel angle toward the preview point at V_x * preview_time.
/// Positive output turns left, so a vehicle left of the path receives a negative angle.
inline double driver_steer(const VehicleState& s, const Path& path, double preview_time, const VehicleParams& p,
                           const DriverConfig& cfg = {}) {
    const Path::Projection proj = path.project(s.X, s.Y);
    const double lookahead = std::max(cfg.min_preview, s.vx * preview_time);
    if (proj.s + lookahead > path.length()) throw Error(ErrorKind::PathExhausted, "preview point beyond path end");
    const PathPoint target = path.at(proj.s + lookahead);
    const double dx = target.X - s.X, dy = target.Y - s.Y;
    const double bx = std::cos(s.psi) * dx + std::sin(s.psi) * dy;
    const double by = -std::sin(s.psi) * dx + std::cos(s.psi) * dy;
    const double ld = std::hypot(bx, by);
    const double heading = std::atan2(by, bx);
    const double wheel = std::atan(2.0 * p.wheelbase() * std::sin(heading) / ld);
    return std::clamp(p.steering_ratio * wheel, -cfg.max_wheel_angle, cfg.max_wheel_angle);
}

/// PI speed holder producing the total drive torque T_t.
class SpeedController {
public:
    SpeedController(double target, double kp, double ki, double torque_limit)
        : target_(target), kp_(kp), ki_(ki), limit_(torque_limit) {}

    double update(double vx, double dt) {
        const double err = target_ - vx;
        const double unsat = kp_ * err + ki_ * (integral_ + err * dt);
        if (std::abs(unsat) < limit_) integral_ += err * dt;
        return std::clamp(kp_ * err + ki_ * integral_, -limit_, limit_);
    }

private:
    double target_;
    double kp_;
    double ki_;
    double limit_;
    double integral_ = 0.0;
};

} // namespace rhonn

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "ratnav/util.hpp"

namespace ratnav {

struct Point2 {
    double x = 0, y = 0;
};

namespace detail {

inline double dist2(const Point2& a, const Point2& b) {
    double dx = a.x - b.x, dy = a.y - b.y;
    return dx * dx + dy * dy;
}

inline double directed_brute2(const std::vector<Point2>& a, const std::vector<Point2>& b) {
    double worst = 0;
    for (const auto& p : a) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& q : b) best = std::min(best, dist2(p, q));
        if (best > worst) worst = best;
    }
    return worst;
}

// uniform grid over b; nearest squared distance via expanding cell rings
struct PointGrid {
    double min_x = 0, min_y = 0, cell = 1;
    int nx = 1, ny = 1;
    std::vector<std::vector<int>> bins;
    const std::vector<Point2>* pts = nullptr;

    explicit PointGrid(const std::vector<Point2>& points) : pts(&points) {
        double max_x = -std::numeric_limits<double>::infinity();
        double max_y = -std::numeric_limits<double>::infinity();
        min_x = std::numeric_limits<double>::infinity();
        min_y = std::numeric_limits<double>::infinity();
        for (const auto& p : points) {
            min_x = std::min(min_x, p.x);
            min_y = std::min(min_y, p.y);
            max_x = std::max(max_x, p.x);
            max_y = std::max(max_y, p.y);
        }
        double span = std::max(max_x - min_x, max_y - min_y);
        int target = std::max(1, static_cast<int>(std::sqrt(static_cast<double>(points.size()))));
        cell = span > 0 ? span / target : 1.0;
        nx = std::max(1, static_cast<int>((max_x - min_x) / cell) + 1);
        ny = std::max(1, static_cast<int>((max_y - min_y) / cell) + 1);
        bins.resize(static_cast<size_t>(nx) * ny);
        for (size_t i = 0; i < points.size(); ++i)
            bins[bin_index(points[i].x, points[i].y)].push_back(static_cast<int>(i));
    }

    size_t bin_index(double x, double y) const {
        int cx = std::clamp(static_cast<int>((x - min_x) / cell), 0, nx - 1);
        int cy = std::clamp(static_cast<int>((y - min_y) / cell), 0, ny - 1);
        return static_cast<size_t>(cx) * ny + cy;
    }

    double nearest2(const Point2& p) const {
        int cx = std::clamp(static_cast<int>((p.x - min_x) / cell), 0, nx - 1);
        int cy = std::clamp(static_cast<int>((p.y - min_y) / cell), 0, ny - 1);
        double best = std::numeric_limits<double>::infinity();
        int max_ring = std::max(nx, ny);
        for (int ring = 0; ring <= max_ring; ++ring) {
            // cells at Chebyshev distance ring cannot hold a point closer than
            // (ring - 1) cells away, so once that bound passes best we are done
            if (ring > 1) {
                double bound = (ring - 1) * cell;
                if (bound * bound > best) break;
            }
            for (int dx = -ring; dx <= ring; ++dx) {
                for (int dy = -ring; dy <= ring; ++dy) {
                    if (std::max(std::abs(dx), std::abs(dy)) != ring) continue;
                    int gx = cx + dx, gy = cy + dy;
                    if (gx < 0 || gx >= nx || gy < 0 || gy >= ny) continue;
                    for (int idx : bins[static_cast<size_t>(gx) * ny + gy])
                        best = std::min(best, dist2(p, (*pts)[static_cast<size_t>(idx)]));
                }
            }
        }
        return best;
    }
};

inline double directed_grid2(const std::vector<Point2>& a, const PointGrid& grid) {
    double worst = 0;
    for (const auto& p : a) {
        double best = grid.nearest2(p);
        if (best > worst) worst = best;
    }
    return worst;
}

}  // namespace detail

inline double hausdorff_brute(const std::vector<Point2>& a, const std::vector<Point2>& b) {
    if (a.empty() || b.empty()) throw std::runtime_error("hausdorff: empty point set");
    return std::sqrt(std::max(detail::directed_brute2(a, b), detail::directed_brute2(b, a)));
}

inline double hausdorff(const std::vector<Point2>& a, const std::vector<Point2>& b) {
    if (a.empty() || b.empty()) throw std::runtime_error("hausdorff: empty point set");
    detail::PointGrid ga(a), gb(b);
    return std::sqrt(std::max(detail::directed_grid2(a, gb), detail::directed_grid2(b, ga)));
}

struct Alignment {
    double theta = 0;    // rotation applied to the estimate
    double tx = 0, ty = 0;

    Point2 apply(const Point2& p) const {
        double c = std::cos(theta), s = std::sin(theta);
        return {c * p.x - s * p.y + tx, s * p.x + c * p.y + ty};
    }
};

// least-squares rigid transform (rotation + translation, no scale) taking the
// estimate onto the reference over paired points
inline Alignment align_rigid(const std::vector<Point2>& est, const std::vector<Point2>& ref) {
    if (est.size() != ref.size()) throw std::runtime_error("align: point counts differ");
    if (est.size() < 2) throw std::runtime_error("align: need at least two pairs");
    double n = static_cast<double>(est.size());
    Point2 ce{0, 0}, cr{0, 0};
    for (size_t i = 0; i < est.size(); ++i) {
        ce.x += est[i].x;
        ce.y += est[i].y;
        cr.x += ref[i].x;
        cr.y += ref[i].y;
    }
    ce.x /= n; ce.y /= n; cr.x /= n; cr.y /= n;
    double sc = 0, ss = 0;
    for (size_t i = 0; i < est.size(); ++i) {
        double ex = est[i].x - ce.x, ey = est[i].y - ce.y;
        double rx = ref[i].x - cr.x, ry = ref[i].y - cr.y;
        sc += ex * rx + ey * ry;
        ss += ex * ry - ey * rx;
    }
    if (sc == 0 && ss == 0)
        throw std::runtime_error("align: degenerate point sets (no spread)");
    Alignment out;
    out.theta = std::atan2(ss, sc);
    double c = std::cos(out.theta), s = std::sin(out.theta);
    out.tx = cr.x - (c * ce.x - s * ce.y);
    out.ty = cr.y - (s * ce.x + c * ce.y);
    return out;
}

inline std::vector<Point2> apply_alignment(const Alignment& al, const std::vector<Point2>& pts) {
    std::vector<Point2> out;
    out.reserve(pts.size());
    for (const auto& p : pts) out.push_back(al.apply(p));
    return out;
}

}  // namespace ratnav

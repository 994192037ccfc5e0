#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <vector>

namespace shelfbrg {

// Slack used for floating-point ties in containment tests (meters).
inline constexpr double kGeomEps = 1e-9;

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  friend bool operator==(const Vec3&, const Vec3&) = default;

  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  double norm() const { return std::sqrt(x * x + y * y + z * z); }
};

inline double distance(const Vec3& a, const Vec3& b) { return (a - b).norm(); }

struct Point2 {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Point2&, const Point2&) = default;
  friend auto operator<=>(const Point2&, const Point2&) = default;
};

/// Axis-aligned rectangle in the shelf x-y plane.
struct Rect2 {
  double min_x = 0.0;
  double min_y = 0.0;
  double max_x = 0.0;
  double max_y = 0.0;

  friend bool operator==(const Rect2&, const Rect2&) = default;

  double width() const { return std::max(0.0, max_x - min_x); }
  double height() const { return std::max(0.0, max_y - min_y); }
  double area() const { return width() * height(); }

  std::array<Point2, 4> corners() const {
    return {Point2{min_x, min_y}, Point2{max_x, min_y}, Point2{max_x, max_y},
            Point2{min_x, max_y}};
  }
};

/// Intersection of two rectangles; may be empty (zero area).
inline Rect2 intersect(const Rect2& a, const Rect2& b) {
  return {std::max(a.min_x, b.min_x), std::max(a.min_y, b.min_y),
          std::min(a.max_x, b.max_x), std::min(a.max_y, b.max_y)};
}

inline double cross(const Point2& o, const Point2& a, const Point2& b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

/// Convex hull by Andrew's monotone chain; counter-clockwise, no collinear
/// vertices. Degenerate inputs yield 1 or 2 points.
inline std::vector<Point2> convex_hull(std::vector<Point2> pts) {
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() < 3) return pts;

  std::vector<Point2> hull(2 * pts.size());
  std::size_t k = 0;
  for (const auto& p : pts) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0) --k;
    hull[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, lower = k + 1; i-- > 0;) {
    while (k >= lower && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  return hull;
}

inline double segment_distance(const Point2& p, const Point2& a, const Point2& b) {
  const double dx = b.x - a.x;
  const double dy = b.y - a.y;
  const double len2 = dx * dx + dy * dy;
  double t = len2 > 0 ? ((p.x - a.x) * dx + (p.y - a.y) * dy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const double ex = a.x + t * dx - p.x;
  const double ey = a.y + t * dy - p.y;
  return std::sqrt(ex * ex + ey * ey);
}

/// True iff `p` lies inside the CCW convex polygon `hull` at a distance of at
/// least `margin` from its boundary. With margin 0 the boundary is inside.
inline bool contains_with_margin(std::span<const Point2> hull, const Point2& p,
                                 double margin) {
  if (hull.empty()) return false;
  if (hull.size() < 3) {
    // Degenerate support (point or segment): only on-support points qualify.
    const double d = hull.size() == 1 ? std::hypot(p.x - hull[0].x, p.y - hull[0].y)
                                      : segment_distance(p, hull[0], hull[1]);
    return margin <= 0.0 && d <= kGeomEps;
  }
  for (std::size_t i = 0; i < hull.size(); ++i) {
    const Point2& a = hull[i];
    const Point2& b = hull[(i + 1) % hull.size()];
    const double len = std::hypot(b.x - a.x, b.y - a.y);
    const double signed_dist = cross(a, b, p) / len;
    if (signed_dist < margin - kGeomEps) return false;
  }
  return true;
}

}  // namespace shelfbrg

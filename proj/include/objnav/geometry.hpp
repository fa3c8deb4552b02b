#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>

namespace objnav {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend constexpr Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend constexpr Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend constexpr Vec2 operator*(double s, Vec2 v) { return {s * v.x, s * v.y}; }
  friend constexpr Vec2 operator*(Vec2 v, double s) { return {s * v.x, s * v.y}; }
  friend constexpr bool operator==(Vec2, Vec2) = default;
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 v) { return std::hypot(v.x, v.y); }
inline double distance(Vec2 a, Vec2 b) { return norm(a - b); }

/// Counter-clockwise rotation by `angle` radians.
inline Vec2 rotate(Vec2 v, double angle) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  return {c * v.x - s * v.y, s * v.x + c * v.y};
}

inline Vec2 unit_from_angle(double angle) { return {std::cos(angle), std::sin(angle)}; }

constexpr double deg_to_rad(double deg) { return deg * std::numbers::pi / 180.0; }
constexpr double rad_to_deg(double rad) { return rad * 180.0 / std::numbers::pi; }

/// Wraps an angle in radians to (-pi, pi].
inline double wrap_angle(double a) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  a = std::fmod(a, two_pi);
  if (a <= -std::numbers::pi) a += two_pi;
  if (a > std::numbers::pi) a -= two_pi;
  return a;
}

/// Rounds to 6 fractional digits; every persisted or wire-visible real goes through this.
inline double round6(double v) {
  if (!std::isfinite(v)) return v;
  const double r = std::round(v * 1e6) / 1e6;
  return r == 0.0 ? 0.0 : r;  // no negative zero
}

/// Oriented box in the floor plane.
struct Obb {
  Vec2 center;
  Vec2 half_extents;
  double yaw = 0.0;

  friend bool operator==(const Obb&, const Obb&) = default;

  Vec2 to_local(Vec2 p) const { return rotate(p - center, -yaw); }
  Vec2 to_world(Vec2 local) const { return center + rotate(local, yaw); }

  /// Half-size of the axis-aligned bounding box.
  Vec2 aabb_half() const {
    const double c = std::abs(std::cos(yaw));
    const double s = std::abs(std::sin(yaw));
    return {c * half_extents.x + s * half_extents.y, s * half_extents.x + c * half_extents.y};
  }

  double perimeter() const { return 4.0 * (half_extents.x + half_extents.y); }

  /// Point at arc length `s` along the boundary, starting at local corner (+ex, -ey)
  /// and running counter-clockwise.
  Vec2 boundary_point(double s) const {
    const double ex = half_extents.x;
    const double ey = half_extents.y;
    s = std::fmod(s, perimeter());
    if (s < 0) s += perimeter();
    Vec2 local;
    if (s < 2 * ey) {
      local = {ex, -ey + s};
    } else if ((s -= 2 * ey) < 2 * ex) {
      local = {ex - s, ey};
    } else if ((s -= 2 * ex) < 2 * ey) {
      local = {-ex, ey - s};
    } else {
      s -= 2 * ey;
      local = {-ex + s, -ey};
    }
    return to_world(local);
  }
};

/// Euclidean distance from a point to the closed oriented rectangle (0 inside).
inline double distance_to_obb(Vec2 p, const Obb& box) {
  const Vec2 l = box.to_local(p);
  const double dx = std::max(std::abs(l.x) - box.half_extents.x, 0.0);
  const double dy = std::max(std::abs(l.y) - box.half_extents.y, 0.0);
  return std::hypot(dx, dy);
}

/// Axis-aligned square [lo, hi].
struct Aabb {
  Vec2 lo;
  Vec2 hi;
};

inline double distance_to_aabb(Vec2 p, const Aabb& b) {
  const double dx = std::max({b.lo.x - p.x, 0.0, p.x - b.hi.x});
  const double dy = std::max({b.lo.y - p.y, 0.0, p.y - b.hi.y});
  return std::hypot(dx, dy);
}

inline Vec2 closest_point_on_aabb(Vec2 p, const Aabb& b) {
  return {std::clamp(p.x, b.lo.x, b.hi.x), std::clamp(p.y, b.lo.y, b.hi.y)};
}

inline double distance_to_segment(Vec2 p, Vec2 a, Vec2 b) {
  const Vec2 ab = b - a;
  const double len2 = dot(ab, ab);
  if (len2 == 0.0) return distance(p, a);
  const double t = std::clamp(dot(p - a, ab) / len2, 0.0, 1.0);
  return distance(p, a + t * ab);
}

/// Liang-Barsky clip; true when the closed segment touches the closed box.
inline bool segment_intersects_aabb(Vec2 a, Vec2 b, const Aabb& box) {
  double t0 = 0.0;
  double t1 = 1.0;
  const Vec2 d = b - a;
  const double p[4] = {-d.x, d.x, -d.y, d.y};
  const double q[4] = {a.x - box.lo.x, box.hi.x - a.x, a.y - box.lo.y, box.hi.y - a.y};
  for (int i = 0; i < 4; ++i) {
    if (p[i] == 0.0) {
      if (q[i] < 0.0) return false;
      continue;
    }
    const double r = q[i] / p[i];
    if (p[i] < 0.0) {
      t0 = std::max(t0, r);
    } else {
      t1 = std::min(t1, r);
    }
    if (t0 > t1) return false;
  }
  return true;
}

inline double segment_distance_to_aabb(Vec2 a, Vec2 b, const Aabb& box) {
  if (segment_intersects_aabb(a, b, box)) return 0.0;
  double d = std::min(distance_to_aabb(a, box), distance_to_aabb(b, box));
  const Vec2 corners[4] = {box.lo, {box.hi.x, box.lo.y}, box.hi, {box.lo.x, box.hi.y}};
  for (const Vec2& c : corners) d = std::min(d, distance_to_segment(c, a, b));
  return d;
}

}  // namespace objnav

#include "objnav/goalzone.hpp"

#include <algorithm>

namespace objnav {

double VisibilityConfig::vfov_deg() const {
  const double half_h = deg_to_rad(hfov_deg) / 2.0;
  return rad_to_deg(2.0 * std::atan(std::tan(half_h) * image_height / image_width));
}

void VisibilityConfig::validate() const {
  if (!(hfov_deg > 0 && hfov_deg < 180)) throw ArgumentError("hfov must lie in (0, 180) degrees");
  if (image_width <= 0 || image_height <= 0) throw ArgumentError("image size must be positive");
  if (boundary_samples < 8) throw ArgumentError("boundary_samples must be >= 8");
  if (!(pitch_min_deg <= pitch_max_deg)) throw ArgumentError("pitch limits are inverted");
  if (!(min_visible_fraction >= 0 && min_visible_fraction <= 1))
    throw ArgumentError("min_visible_fraction must lie in [0, 1]");
}

bool vertical_band_hits(double d, double z_min, double z_max, double eye_height, double vfov_rad,
                        double pitch_lo, double pitch_hi) {
  constexpr double limit = std::numbers::pi / 2 - 1e-6;
  // The band [L(phi), U(phi)] slides upward continuously with phi, so some phi meets
  // [z_min, z_max] iff the highest band top reaches z_min and the lowest band bottom
  // stays under z_max.
  const double top = eye_height + d * std::tan(std::min(pitch_hi + vfov_rad / 2, limit));
  const double bottom = eye_height + d * std::tan(std::max(pitch_lo - vfov_rad / 2, -limit));
  return top >= z_min && bottom <= z_max;
}

namespace {

int owner_index(const Scene& scene, const ObjectInstance& instance) {
  const auto& objs = scene.objects();
  for (std::size_t i = 0; i < objs.size(); ++i)
    if (objs[i].instance_id == instance.instance_id) return static_cast<int>(i);
  return -1;
}

// Nothing but the target blocks the plan-view segment from `from` to `to`.
bool sight_line_clear(const Scene& scene, Vec2 from, Vec2 to, int target) {
  const Vec2 delta = to - from;
  const double d = norm(delta);
  if (d == 0.0) return true;
  const Vec2 dir = (1.0 / d) * delta;
  const auto& grid = scene.occupancy();
  bool clear = true;
  traverse_cells(grid.cell_size(), from, dir, d, [&](Cell c, double t) {
    if (t >= d - 1e-9) return false;
    if (grid.obstructed(c.row, c.col) && (target < 0 || scene.object_at(c.row, c.col) != target)) {
      clear = false;
      return false;
    }
    return true;
  });
  return clear;
}

int required_samples(const VisibilityConfig& cfg) {
  return std::max(1, static_cast<int>(std::ceil(cfg.min_visible_fraction * cfg.boundary_samples - 1e-12)));
}

template <typename SamplePredicate>
bool enough_samples_visible(const Scene& scene, Vec2 eye, const ObjectInstance& instance,
                            const VisibilityConfig& cfg, SamplePredicate&& accept) {
  const int target = owner_index(scene, instance);
  const int needed = required_samples(cfg);
  const double step = instance.obb.perimeter() / cfg.boundary_samples;
  int visible = 0;
  for (int k = 0; k < cfg.boundary_samples; ++k) {
    const Vec2 s = instance.obb.boundary_point(k * step);
    if (!accept(s, distance(eye, s))) continue;
    if (!sight_line_clear(scene, eye, s, target)) continue;
    if (++visible >= needed) return true;
  }
  return false;
}

}  // namespace

bool oracle_visible(const Scene& scene, Vec2 point, const ObjectInstance& instance, const VisibilityConfig& cfg) {
  const double vfov = deg_to_rad(cfg.vfov_deg());
  const double lo = deg_to_rad(cfg.pitch_min_deg);
  const double hi = deg_to_rad(cfg.pitch_max_deg);
  return enough_samples_visible(scene, point, instance, cfg, [&](Vec2, double d) {
    return vertical_band_hits(d, instance.z_min, instance.z_max, cfg.eye_height, vfov, lo, hi);
  });
}

bool in_view(const Scene& scene, const ViewPose& pose, const ObjectInstance& instance, const VisibilityConfig& cfg) {
  const double vfov = deg_to_rad(cfg.vfov_deg());
  const double half_h = deg_to_rad(cfg.hfov_deg) / 2;
  return enough_samples_visible(scene, pose.position, instance, cfg, [&](Vec2 s, double d) {
    const Vec2 v = s - pose.position;
    if (std::abs(wrap_angle(std::atan2(v.y, v.x) - pose.heading)) > half_h + 1e-12) return false;
    return vertical_band_hits(d, instance.z_min, instance.z_max, cfg.eye_height, vfov, pose.pitch, pose.pitch);
  });
}

std::vector<Viewpoint> compute_viewpoints(const Scene& scene, const NavGrid& grid, const ObjectInstance& instance,
                                          double r_success, const VisibilityConfig& cfg) {
  if (!(r_success > 0)) throw ArgumentError("r_success must be positive");
  cfg.validate();
  const double pitch = viewpoint_lattice_pitch(grid.radius());
  const Vec2 half = instance.obb.aabb_half();
  const Vec2 c = instance.obb.center;
  const int i0 = std::max(0, static_cast<int>(std::ceil((c.x - half.x - r_success) / pitch)));
  const int i1 = static_cast<int>(std::floor(std::min(c.x + half.x + r_success, scene.width()) / pitch));
  const int j0 = std::max(0, static_cast<int>(std::ceil((c.y - half.y - r_success) / pitch)));
  const int j1 = static_cast<int>(std::floor(std::min(c.y + half.y + r_success, scene.height()) / pitch));

  std::vector<Viewpoint> out;
  for (int j = j0; j <= j1; ++j) {
    for (int i = i0; i <= i1; ++i) {
      const Vec2 p{round6(i * pitch), round6(j * pitch)};
      if (!scene.in_bounds(p)) continue;
      const double d = distance_to_obb(p, instance.obb);
      if (d > r_success) continue;
      if (!grid.navigable(p) || !grid.snap(p)) continue;
      if (!oracle_visible(scene, p, instance, cfg)) continue;
      out.push_back({p, instance.instance_id, round6(d)});
    }
  }
  return out;
}

}  // namespace objnav

#pragma once

#include <string>
#include <vector>

#include "objnav/nav.hpp"
#include "objnav/scene.hpp"

namespace objnav {

struct Viewpoint {
  Vec2 position;
  std::string instance_id;
  double distance_to_surface = 0.0;

  friend bool operator==(const Viewpoint&, const Viewpoint&) = default;
};

struct VisibilityConfig {
  double hfov_deg = 79.0;
  int image_width = 640;
  int image_height = 480;
  double eye_height = 0.88;
  double pitch_min_deg = -30.0;
  double pitch_max_deg = 30.0;
  int boundary_samples = 64;
  // 0 means a single visible boundary sample suffices.
  double min_visible_fraction = 0.0;

  /// Vertical field of view implied by hfov and the image aspect ratio, in degrees.
  double vfov_deg() const;
  /// Throws ArgumentError on an out-of-range field.
  void validate() const;
};

/// Point the agent looks at, from an eye at the agent's position.
struct ViewPose {
  Vec2 position;
  double heading = 0.0;  // radians
  double pitch = 0.0;    // radians, positive looks up
};

/// Goal can be framed from `point` by reorienting the camera in place.
bool oracle_visible(const Scene& scene, Vec2 point, const ObjectInstance& instance, const VisibilityConfig& cfg);

/// Goal is in the current camera frustum (heading +- hfov/2, current pitch only).
bool in_view(const Scene& scene, const ViewPose& pose, const ObjectInstance& instance, const VisibilityConfig& cfg);

/// Whether the vertical view band at horizontal distance `d` meets [z_min, z_max]
/// for some pitch in [pitch_lo, pitch_hi] (radians).
bool vertical_band_hits(double d, double z_min, double z_max, double eye_height, double vfov_rad,
                        double pitch_lo, double pitch_hi);

/// Lattice spacing for viewpoint sampling: half the agent radius.
inline double viewpoint_lattice_pitch(double agent_radius) { return agent_radius / 2.0; }

/// Lattice points within r_success of the box (or inside it) that are navigable at
/// grid.radius(), snap to a free grid cell, and see the object under oracle visibility.
/// Ordered by lattice row, then column.
std::vector<Viewpoint> compute_viewpoints(const Scene& scene, const NavGrid& grid, const ObjectInstance& instance,
                                          double r_success, const VisibilityConfig& cfg);

}  // namespace objnav

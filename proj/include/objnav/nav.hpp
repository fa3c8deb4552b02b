#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "objnav/scene.hpp"

namespace objnav {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Configuration-space grid: a cell is free iff a disc of `radius` fits at its center.
class NavGrid {
 public:
  NavGrid(const Scene& scene, double radius);

  const std::string& scene_id() const { return scene_id_; }
  double radius() const { return radius_; }
  double cell_size() const { return occupancy_.cell_size(); }
  int rows() const { return occupancy_.rows(); }
  int cols() const { return occupancy_.cols(); }
  std::size_t size() const { return free_.size(); }

  bool free(int r, int c) const { return occupancy_.contains(r, c) && free_[occupancy_.index(r, c)] != 0; }
  bool free(Cell c) const { return free(c.row, c.col); }
  std::size_t index(Cell c) const { return occupancy_.index(c.row, c.col); }
  Cell cell_at(std::size_t index) const {
    return {static_cast<int>(index / static_cast<std::size_t>(cols())),
            static_cast<int>(index % static_cast<std::size_t>(cols()))};
  }
  Vec2 center(Cell c) const { return occupancy_.center(c); }
  const OccupancyGrid& occupancy() const { return occupancy_; }
  std::size_t free_count() const;

  /// Navigability of an arbitrary point at this grid's radius (false outside the scene).
  bool navigable(Vec2 p) const;

  /// Maximum distance a query point may move when snapped: one cell step (diagonal).
  double snap_tolerance() const { return cell_size() * std::numbers::sqrt2 + 1e-9; }

  /// Nearest free cell whose center lies within snap_tolerance() of `p`.
  std::optional<Cell> snap(Vec2 p) const;

 private:
  std::string scene_id_;
  double radius_;
  OccupancyGrid occupancy_;
  std::vector<std::uint8_t> free_;
};

/// Throws ArgumentError if radius <= 0 or no cell is free.
NavGrid build_navgrid(const Scene& scene, double radius = 0.18);

/// Multi-source shortest distances over the 8-connected free-cell graph.
struct GeodesicField {
  int rows = 0;
  int cols = 0;
  double cell_size = 0.0;
  std::vector<double> dist;
  std::vector<std::int32_t> next;  // neighbor one step closer to a source, -1 at sources/unreached

  double at(Cell c) const {
    if (c.row < 0 || c.col < 0 || c.row >= rows || c.col >= cols) return kInfinity;
    return dist[static_cast<std::size_t>(c.row) * cols + c.col];
  }
  /// Field value at the snapped cell of `p`; +inf when `p` does not snap.
  double at(const NavGrid& grid, Vec2 p) const;
};

/// Dijkstra from every goal cell. Straight edges cost cell_size, diagonals cell_size*sqrt(2);
/// a diagonal is allowed only when both orthogonal neighbors are free. Exploration stops
/// once distances exceed `cutoff`, leaving the remainder at +inf.
GeodesicField geodesic_field(const NavGrid& grid, std::span<const Cell> goals, double cutoff = kInfinity);

/// Snaps every target; throws ArgumentError on an empty list, an unsnappable target,
/// or a non-navigable start. Returns +inf when unreachable.
std::vector<Cell> snap_targets(const NavGrid& grid, std::span<const Vec2> to_points);
double geodesic_distance(const NavGrid& grid, Vec2 from, std::span<const Vec2> to_points);

/// Cell-center chain from the start cell to the nearest target, string-pulled until no
/// vertex can be dropped without the swept disc touching an obstacle.
std::vector<Vec2> shortest_path(const NavGrid& grid, Vec2 from, std::span<const Vec2> to_points);

/// Follows the field's predecessor chain from `start` to a source and string-pulls it.
std::vector<Vec2> path_from_field(const NavGrid& grid, const GeodesicField& field, Cell start);

/// Greedy vertex removal, repeated until a fixpoint.
std::vector<Vec2> string_pull(const NavGrid& grid, std::vector<Vec2> chain);

double polyline_length(std::span<const Vec2> polyline);

struct ActionQuanta {
  double step = 0.25;      // meters per forward action
  double turn_deg = 30.0;  // degrees per turn action
};

/// Forward actions per straight run plus turn actions per heading change, plus one STOP.
/// Collinear consecutive segments are merged before rounding up.
int action_path_length(std::span<const Vec2> polyline, const ActionQuanta& quanta, double initial_heading);

}  // namespace objnav

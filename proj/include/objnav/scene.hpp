#pragma once

#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "objnav/error.hpp"
#include "objnav/geometry.hpp"

namespace objnav {

struct Cell {
  int row = 0;
  int col = 0;
  friend constexpr bool operator==(Cell, Cell) = default;
  friend constexpr auto operator<=>(Cell, Cell) = default;
};

/// Row-major boolean grid; cell (i, j) covers [j*cell, (j+1)*cell) x [i*cell, (i+1)*cell).
/// Anything outside the grid reads as obstructed.
class OccupancyGrid {
 public:
  OccupancyGrid() = default;
  OccupancyGrid(int rows, int cols, double cell_size)
      : rows_(rows), cols_(cols), cell_(cell_size),
        cells_(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols), 0) {}

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  double cell_size() const { return cell_; }
  std::size_t size() const { return cells_.size(); }

  bool contains(int r, int c) const { return r >= 0 && c >= 0 && r < rows_ && c < cols_; }
  std::size_t index(int r, int c) const {
    return static_cast<std::size_t>(r) * static_cast<std::size_t>(cols_) + static_cast<std::size_t>(c);
  }
  bool obstructed(int r, int c) const { return !contains(r, c) || cells_[index(r, c)] != 0; }
  void set(int r, int c, bool value) { cells_[index(r, c)] = value ? 1 : 0; }

  Cell cell_of(Vec2 p) const {
    return {static_cast<int>(std::floor(p.y / cell_)), static_cast<int>(std::floor(p.x / cell_))};
  }
  Vec2 center(Cell c) const { return {(c.col + 0.5) * cell_, (c.row + 0.5) * cell_}; }
  Aabb box(int r, int c) const { return {{c * cell_, r * cell_}, {(c + 1) * cell_, (r + 1) * cell_}}; }

  const std::vector<std::uint8_t>& raw() const { return cells_; }

  friend bool operator==(const OccupancyGrid&, const OccupancyGrid&) = default;

 private:
  int rows_ = 0;
  int cols_ = 0;
  double cell_ = 0.0;
  std::vector<std::uint8_t> cells_;
};

/// Distances within this of the radius count as touching, not overlapping, so exact
/// tangencies between lattice points and cell edges do not depend on rounding.
inline constexpr double kContactTolerance = 1e-9;

/// True iff no obstructed cell square lies closer than `radius` to `p`.
bool disc_clear(const OccupancyGrid& grid, Vec2 p, double radius);

/// Swept-disc test: true iff every point of segment a-b keeps distance >= radius
/// from every obstructed cell.
bool segment_clear(const OccupancyGrid& grid, Vec2 a, Vec2 b, double radius);

/// Cells whose square overlaps the box with positive area.
std::vector<Cell> footprint_cells(const Obb& box, int rows, int cols, double cell_size);

struct ObjectInstance {
  std::string instance_id;
  std::string category;
  Obb obb;
  double z_min = 0.0;
  double z_max = 0.0;

  friend bool operator==(const ObjectInstance&, const ObjectInstance&) = default;
};

class CategoryVocabulary {
 public:
  CategoryVocabulary() = default;
  explicit CategoryVocabulary(std::vector<std::string> names);

  /// The 21 Matterport3D goal categories in their canonical order.
  static const CategoryVocabulary& mp3d();

  const std::vector<std::string>& names() const { return names_; }
  bool contains(std::string_view name) const;
  std::size_t size() const { return names_.size(); }

 private:
  std::vector<std::string> names_;
};

/// Physical defaults for a category: footprint half extents and vertical extent.
struct CategoryShape {
  Vec2 half_extents;
  double z_min = 0.0;
  double z_max = 0.0;
};

using CategoryTable = std::map<std::string, CategoryShape, std::less<>>;

/// Built-in sizes and mounting heights; our own estimates, not measured data.
const CategoryTable& default_category_table();

/// Reads overrides from a JSON object {category: {half_extents:[ex,ey], height_range:[z0,z1]}}
/// layered over `base`.
CategoryTable load_category_table(std::istream& in, CategoryTable base = default_category_table());

/// Plan-view indoor scene. Immutable after construction.
class Scene {
 public:
  /// Validates every scene invariant; throws ValidationError naming the violated one.
  static Scene create(std::string scene_id, OccupancyGrid occupancy, std::vector<ObjectInstance> objects,
                      std::uint64_t seed,
                      const CategoryVocabulary& vocabulary = CategoryVocabulary::mp3d());

  const std::string& id() const { return id_; }
  std::uint64_t seed() const { return seed_; }
  const OccupancyGrid& occupancy() const { return grid_; }
  int rows() const { return grid_.rows(); }
  int cols() const { return grid_.cols(); }
  double cell_size() const { return grid_.cell_size(); }
  double width() const { return round6(grid_.cols() * grid_.cell_size()); }
  double height() const { return round6(grid_.rows() * grid_.cell_size()); }
  bool in_bounds(Vec2 p) const { return p.x >= 0 && p.y >= 0 && p.x <= width() && p.y <= height(); }

  const std::vector<ObjectInstance>& objects() const { return objects_; }
  const ObjectInstance* find_object(std::string_view instance_id) const;
  std::vector<const ObjectInstance*> objects_of(std::string_view category) const;
  /// Categories present in the scene, in first-appearance order.
  std::vector<std::string> categories() const;

  /// Index into objects() of the instance whose footprint covers the cell, or -1.
  int object_at(int r, int c) const {
    return grid_.contains(r, c) ? owner_[grid_.index(r, c)] : -1;
  }

  friend bool operator==(const Scene& a, const Scene& b) {
    return a.id_ == b.id_ && a.seed_ == b.seed_ && a.grid_ == b.grid_ && a.objects_ == b.objects_;
  }

 private:
  Scene() = default;

  std::string id_;
  std::uint64_t seed_ = 0;
  OccupancyGrid grid_;
  std::vector<ObjectInstance> objects_;
  std::vector<std::int32_t> owner_;
};

/// Disc-vs-cell navigability. Throws ArgumentError when `p` lies outside the scene.
bool is_navigable(const Scene& scene, Vec2 p, double radius);

struct RayHit {
  bool hit = false;
  double range = 0.0;
  std::optional<std::string> hit_instance;
};

/// Exact grid traversal; stops at the first obstructed cell.
RayHit raycast(const Scene& scene, Vec2 origin, Vec2 direction, double max_range);

/// Visits the cells a ray passes through, in order, with the parameter at which the
/// ray enters each one (0 for the origin cell). The visitor returns false to stop.
/// Ties at exact cell corners step along x first.
template <typename Visitor>
void traverse_cells(double cell_size, Vec2 origin, Vec2 dir, double max_t, Visitor&& visit) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  int col = static_cast<int>(std::floor(origin.x / cell_size));
  int row = static_cast<int>(std::floor(origin.y / cell_size));
  const int step_c = dir.x > 0 ? 1 : (dir.x < 0 ? -1 : 0);
  const int step_r = dir.y > 0 ? 1 : (dir.y < 0 ? -1 : 0);
  double t_max_c = step_c > 0 ? ((col + 1) * cell_size - origin.x) / dir.x
                 : step_c < 0 ? (col * cell_size - origin.x) / dir.x
                              : inf;
  double t_max_r = step_r > 0 ? ((row + 1) * cell_size - origin.y) / dir.y
                 : step_r < 0 ? (row * cell_size - origin.y) / dir.y
                              : inf;
  const double t_delta_c = step_c != 0 ? cell_size / std::abs(dir.x) : inf;
  const double t_delta_r = step_r != 0 ? cell_size / std::abs(dir.y) : inf;

  if (!visit(Cell{row, col}, 0.0)) return;
  for (;;) {
    double t;
    if (t_max_c <= t_max_r) {
      t = t_max_c;
      col += step_c;
      t_max_c += t_delta_c;
    } else {
      t = t_max_r;
      row += step_r;
      t_max_r += t_delta_r;
    }
    if (t > max_t) return;
    if (!visit(Cell{row, col}, t)) return;
  }
}

struct SceneParams {
  std::string scene_id;  // empty: derived from the seed
  double width = 20.0;
  double height = 20.0;
  int room_count = 4;
  int objects_min = 1;  // per category
  int objects_max = 2;
  CategoryVocabulary vocabulary = CategoryVocabulary::mp3d();
  CategoryTable category_table = default_category_table();
  double cell_size = 0.05;
  std::uint64_t seed = 0;
  double agent_radius = 0.18;
  double wall_thickness = 0.1;
  double min_room_size = 2.0;
  double door_width = 0.9;
  int placement_retries = 100;
};

/// Thrown when an object cannot be placed within the retry budget.
class PlacementError : public Error {
 public:
  explicit PlacementError(std::string category)
      : Error("could not place an instance of category '" + category + "'"),
        category_(std::move(category)) {}
  const std::string& category() const { return category_; }

 private:
  std::string category_;
};

/// Axis-aligned rooms joined by doorways, furnished with one obstacle box per object.
/// Every free cell of the clearance-inflated grid is mutually reachable.
Scene generate_scene(const SceneParams& params);

/// Cells whose centers admit a disc of `radius` (the configuration-space free set).
std::vector<std::uint8_t> inflate(const OccupancyGrid& grid, double radius);

/// Labels 8-connected components of the free cells in `free`, disallowing diagonal
/// moves past a blocked orthogonal neighbor. Returns the component count.
int label_components(const std::vector<std::uint8_t>& free, int rows, int cols,
                     std::vector<std::int32_t>& labels);

void save_scene(const Scene& scene, std::ostream& out);
std::string scene_to_json(const Scene& scene);
Scene load_scene(std::istream& in, const CategoryVocabulary& vocabulary = CategoryVocabulary::mp3d());
Scene scene_from_json(std::string_view text,
                      const CategoryVocabulary& vocabulary = CategoryVocabulary::mp3d());

}  // namespace objnav

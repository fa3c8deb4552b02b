#include "objnav/scene.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <istream>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>

#include "nlohmann/json.hpp"
#include "objnav/random.hpp"

namespace objnav {

// ---------------------------------------------------------------------------
// Grid predicates

bool disc_clear(const OccupancyGrid& grid, Vec2 p, double radius) {
  const double cs = grid.cell_size();
  const int c0 = static_cast<int>(std::floor((p.x - radius) / cs));
  const int c1 = static_cast<int>(std::floor((p.x + radius) / cs));
  const int r0 = static_cast<int>(std::floor((p.y - radius) / cs));
  const int r1 = static_cast<int>(std::floor((p.y + radius) / cs));
  for (int r = r0; r <= r1; ++r) {
    for (int c = c0; c <= c1; ++c) {
      if (grid.obstructed(r, c) && distance_to_aabb(p, grid.box(r, c)) < radius - kContactTolerance) return false;
    }
  }
  return true;
}

bool segment_clear(const OccupancyGrid& grid, Vec2 a, Vec2 b, double radius) {
  const double cs = grid.cell_size();
  const Vec2 d = b - a;
  const int r0 = static_cast<int>(std::floor((std::min(a.y, b.y) - radius) / cs));
  const int r1 = static_cast<int>(std::floor((std::max(a.y, b.y) + radius) / cs));
  for (int r = r0; r <= r1; ++r) {
    // Portion of the segment whose y lies within radius of this row.
    const double ylo = r * cs - radius;
    const double yhi = (r + 1) * cs + radius;
    double tlo = 0.0;
    double thi = 1.0;
    if (d.y != 0.0) {
      double t_a = (ylo - a.y) / d.y;
      double t_b = (yhi - a.y) / d.y;
      if (t_a > t_b) std::swap(t_a, t_b);
      tlo = std::max(tlo, t_a);
      thi = std::min(thi, t_b);
      if (tlo > thi) continue;
    } else if (a.y < ylo || a.y > yhi) {
      continue;
    }
    const double xa = a.x + tlo * d.x;
    const double xb = a.x + thi * d.x;
    const int c0 = static_cast<int>(std::floor((std::min(xa, xb) - radius) / cs));
    const int c1 = static_cast<int>(std::floor((std::max(xa, xb) + radius) / cs));
    for (int c = c0; c <= c1; ++c) {
      if (grid.obstructed(r, c) && segment_distance_to_aabb(a, b, grid.box(r, c)) < radius - kContactTolerance)
        return false;
    }
  }
  return true;
}

namespace {

bool intervals_overlap(double a0, double a1, double b0, double b1) {
  return std::min(a1, b1) - std::max(a0, b0) > 1e-12;
}

// Separating-axis test between the cell square and the box, strict overlap.
bool square_overlaps_obb(const Aabb& sq, const Obb& box) {
  const Vec2 half = box.aabb_half();
  if (!intervals_overlap(sq.lo.x, sq.hi.x, box.center.x - half.x, box.center.x + half.x)) return false;
  if (!intervals_overlap(sq.lo.y, sq.hi.y, box.center.y - half.y, box.center.y + half.y)) return false;
  const std::array<Vec2, 2> axes = {unit_from_angle(box.yaw), unit_from_angle(box.yaw + std::numbers::pi / 2)};
  const std::array<Vec2, 4> corners = {sq.lo, Vec2{sq.hi.x, sq.lo.y}, sq.hi, Vec2{sq.lo.x, sq.hi.y}};
  for (int k = 0; k < 2; ++k) {
    const Vec2 axis = axes[k];
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const Vec2& c : corners) {
      const double v = dot(c - box.center, axis);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    const double e = k == 0 ? box.half_extents.x : box.half_extents.y;
    if (!intervals_overlap(lo, hi, -e, e)) return false;
  }
  return true;
}

}  // namespace

std::vector<Cell> footprint_cells(const Obb& box, int rows, int cols, double cell_size) {
  const Vec2 half = box.aabb_half();
  const int c0 = std::max(0, static_cast<int>(std::floor((box.center.x - half.x) / cell_size)));
  const int c1 = std::min(cols - 1, static_cast<int>(std::floor((box.center.x + half.x) / cell_size)));
  const int r0 = std::max(0, static_cast<int>(std::floor((box.center.y - half.y) / cell_size)));
  const int r1 = std::min(rows - 1, static_cast<int>(std::floor((box.center.y + half.y) / cell_size)));
  std::vector<Cell> out;
  for (int r = r0; r <= r1; ++r) {
    for (int c = c0; c <= c1; ++c) {
      const Aabb sq{{c * cell_size, r * cell_size}, {(c + 1) * cell_size, (r + 1) * cell_size}};
      if (square_overlaps_obb(sq, box)) out.push_back({r, c});
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Vocabulary and category defaults

CategoryVocabulary::CategoryVocabulary(std::vector<std::string> names) : names_(std::move(names)) {
  std::set<std::string, std::less<>> seen;
  for (const auto& n : names_) {
    if (n.empty()) throw ValidationError("vocabulary_names", "empty category name");
    if (!seen.insert(n).second) throw ValidationError("vocabulary_unique", "duplicate category '" + n + "'");
  }
}

const CategoryVocabulary& CategoryVocabulary::mp3d() {
  static const CategoryVocabulary vocab({
      "chair", "table", "picture", "cabinet", "cushion", "sofa", "bed",
      "chest_of_drawers", "plant", "sink", "toilet", "stool", "towel", "tv_monitor",
      "shower", "bathtub", "counter", "fireplace", "gym_equipment", "seating", "clothes",
  });
  return vocab;
}

bool CategoryVocabulary::contains(std::string_view name) const {
  return std::find(names_.begin(), names_.end(), name) != names_.end();
}

const CategoryTable& default_category_table() {
  static const CategoryTable table = {
      {"chair", {{0.25, 0.25}, 0.0, 0.9}},
      {"table", {{0.6, 0.4}, 0.0, 0.75}},
      {"picture", {{0.35, 0.04}, 1.2, 1.8}},
      {"cabinet", {{0.45, 0.25}, 0.0, 1.8}},
      {"cushion", {{0.22, 0.22}, 0.3, 0.5}},
      {"sofa", {{0.9, 0.45}, 0.0, 0.8}},
      {"bed", {{1.0, 0.8}, 0.0, 0.6}},
      {"chest_of_drawers", {{0.5, 0.25}, 0.0, 1.0}},
      {"plant", {{0.2, 0.2}, 0.0, 1.2}},
      {"sink", {{0.3, 0.25}, 0.75, 0.95}},
      {"toilet", {{0.2, 0.3}, 0.0, 0.8}},
      {"stool", {{0.18, 0.18}, 0.0, 0.6}},
      {"towel", {{0.25, 0.04}, 0.8, 1.5}},
      {"tv_monitor", {{0.5, 0.08}, 0.9, 1.6}},
      {"shower", {{0.45, 0.45}, 0.0, 2.1}},
      {"bathtub", {{0.85, 0.4}, 0.0, 0.6}},
      {"counter", {{0.9, 0.3}, 0.0, 0.9}},
      {"fireplace", {{0.7, 0.25}, 0.0, 1.2}},
      {"gym_equipment", {{0.6, 0.4}, 0.0, 1.4}},
      {"seating", {{0.6, 0.3}, 0.0, 0.85}},
      {"clothes", {{0.3, 0.2}, 0.5, 1.6}},
  };
  return table;
}

CategoryTable load_category_table(std::istream& in, CategoryTable base) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("category table: ") + e.what(), e.byte);
  }
  if (!doc.is_object()) throw ValidationError("schema", "category table must be a JSON object");
  for (const auto& [name, entry] : doc.items()) {
    try {
      CategoryShape shape;
      const auto& he = entry.at("half_extents");
      const auto& hr = entry.at("height_range");
      shape.half_extents = {he.at(0).get<double>(), he.at(1).get<double>()};
      shape.z_min = hr.at(0).get<double>();
      shape.z_max = hr.at(1).get<double>();
      if (!(shape.half_extents.x > 0 && shape.half_extents.y > 0))
        throw ValidationError("half_extents_positive", "category '" + name + "'");
      if (!(shape.z_min >= 0 && shape.z_min < shape.z_max))
        throw ValidationError("height_range", "category '" + name + "'");
      base[name] = shape;
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError("schema", "category '" + name + "': " + e.what());
    }
  }
  return base;
}

// ---------------------------------------------------------------------------
// Scene

Scene Scene::create(std::string scene_id, OccupancyGrid occupancy, std::vector<ObjectInstance> objects,
                    std::uint64_t seed, const CategoryVocabulary& vocabulary) {
  if (scene_id.empty()) throw ValidationError("scene_id", "scene id must be non-empty");
  if (occupancy.rows() < 3 || occupancy.cols() < 3 || !(occupancy.cell_size() > 0))
    throw ValidationError("dimensions", "grid must be at least 3x3 with positive cell size");
  for (int c = 0; c < occupancy.cols(); ++c) {
    if (!occupancy.obstructed(0, c) || !occupancy.obstructed(occupancy.rows() - 1, c))
      throw ValidationError("boundary_closed", "boundary cell in column " + std::to_string(c) + " is free");
  }
  for (int r = 0; r < occupancy.rows(); ++r) {
    if (!occupancy.obstructed(r, 0) || !occupancy.obstructed(r, occupancy.cols() - 1))
      throw ValidationError("boundary_closed", "boundary cell in row " + std::to_string(r) + " is free");
  }

  Scene s;
  s.id_ = std::move(scene_id);
  s.seed_ = seed;
  s.owner_.assign(occupancy.size(), -1);
  std::set<std::string, std::less<>> ids;
  for (std::size_t i = 0; i < objects.size(); ++i) {
    const auto& o = objects[i];
    if (!ids.insert(o.instance_id).second)
      throw ValidationError("unique_instance_id", "duplicate instance id '" + o.instance_id + "'");
    if (!vocabulary.contains(o.category))
      throw ValidationError("category_in_vocabulary", "unknown category '" + o.category + "'");
    if (!(o.obb.half_extents.x > 0 && o.obb.half_extents.y > 0))
      throw ValidationError("half_extents_positive", "object '" + o.instance_id + "'");
    if (!(o.z_min >= 0 && o.z_min < o.z_max))
      throw ValidationError("height_range", "object '" + o.instance_id + "' needs 0 <= z_min < z_max");
    for (const Cell& c : footprint_cells(o.obb, occupancy.rows(), occupancy.cols(), occupancy.cell_size())) {
      if (!occupancy.obstructed(c.row, c.col))
        throw ValidationError("footprint_obstructed",
                              "object '" + o.instance_id + "' covers free cell (" + std::to_string(c.row) +
                                  "," + std::to_string(c.col) + ")");
      auto& owner = s.owner_[occupancy.index(c.row, c.col)];
      if (owner < 0) owner = static_cast<std::int32_t>(i);
    }
  }
  s.grid_ = std::move(occupancy);
  s.objects_ = std::move(objects);
  return s;
}

const ObjectInstance* Scene::find_object(std::string_view instance_id) const {
  for (const auto& o : objects_)
    if (o.instance_id == instance_id) return &o;
  return nullptr;
}

std::vector<const ObjectInstance*> Scene::objects_of(std::string_view category) const {
  std::vector<const ObjectInstance*> out;
  for (const auto& o : objects_)
    if (o.category == category) out.push_back(&o);
  return out;
}

std::vector<std::string> Scene::categories() const {
  std::vector<std::string> out;
  for (const auto& o : objects_)
    if (std::find(out.begin(), out.end(), o.category) == out.end()) out.push_back(o.category);
  return out;
}

bool is_navigable(const Scene& scene, Vec2 p, double radius) {
  if (!scene.in_bounds(p)) {
    std::ostringstream msg;
    msg << "point (" << p.x << ", " << p.y << ") is outside scene '" << scene.id() << "'";
    throw ArgumentError(msg.str());
  }
  return disc_clear(scene.occupancy(), p, radius);
}

RayHit raycast(const Scene& scene, Vec2 origin, Vec2 direction, double max_range) {
  if (std::abs(norm(direction) - 1.0) > 1e-9) throw ArgumentError("raycast direction must be a unit vector");
  const auto& grid = scene.occupancy();
  RayHit out{false, max_range, std::nullopt};
  traverse_cells(grid.cell_size(), origin, direction, max_range, [&](Cell c, double t) {
    if (!grid.obstructed(c.row, c.col)) return true;
    out.hit = true;
    out.range = t;
    if (const int owner = scene.object_at(c.row, c.col); owner >= 0)
      out.hit_instance = scene.objects()[static_cast<std::size_t>(owner)].instance_id;
    return false;
  });
  return out;
}

// ---------------------------------------------------------------------------
// Configuration-space helpers

std::vector<std::uint8_t> inflate(const OccupancyGrid& grid, double radius) {
  std::vector<std::uint8_t> free(grid.size(), 0);
  for (int r = 0; r < grid.rows(); ++r)
    for (int c = 0; c < grid.cols(); ++c)
      free[grid.index(r, c)] = disc_clear(grid, grid.center({r, c}), radius) ? 1 : 0;
  return free;
}

namespace {

constexpr std::array<std::array<int, 2>, 8> kNeighbors = {{
    {{0, 1}}, {{0, -1}}, {{1, 0}}, {{-1, 0}}, {{1, 1}}, {{1, -1}}, {{-1, 1}}, {{-1, -1}},
}};

}  // namespace

int label_components(const std::vector<std::uint8_t>& free, int rows, int cols,
                     std::vector<std::int32_t>& labels) {
  labels.assign(free.size(), -1);
  auto is_free = [&](int r, int c) {
    return r >= 0 && c >= 0 && r < rows && c < cols && free[static_cast<std::size_t>(r) * cols + c] != 0;
  };
  int count = 0;
  std::vector<int> stack;
  for (int start = 0; start < rows * cols; ++start) {
    if (!free[start] || labels[start] >= 0) continue;
    labels[start] = count;
    stack.push_back(start);
    while (!stack.empty()) {
      const int idx = stack.back();
      stack.pop_back();
      const int r = idx / cols;
      const int c = idx % cols;
      for (const auto& [dr, dc] : kNeighbors) {
        const int nr = r + dr;
        const int nc = c + dc;
        if (!is_free(nr, nc)) continue;
        if (dr != 0 && dc != 0 && (!is_free(r + dr, c) || !is_free(r, c + dc))) continue;
        const int nidx = nr * cols + nc;
        if (labels[nidx] >= 0) continue;
        labels[nidx] = count;
        stack.push_back(nidx);
      }
    }
    ++count;
  }
  return count;
}

// ---------------------------------------------------------------------------
// Procedural generation

namespace {

struct Room {
  int r0, c0, r1, c1;  // half-open cell ranges
  int rows() const { return r1 - r0; }
  int cols() const { return c1 - c0; }
  long area() const { return static_cast<long>(rows()) * cols(); }
};

struct Door {
  int r0, c0, r1, c1;
};

struct DisjointSet {
  std::vector<int> parent;
  explicit DisjointSet(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  bool unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent[b] = a;
    return true;
  }
};

std::vector<Room> split_rooms(int rows, int cols, int room_count, int wall, int min_cells, Rng& rng) {
  std::vector<Room> rooms = {{1, 1, rows - 1, cols - 1}};
  while (static_cast<int>(rooms.size()) < room_count) {
    int best = -1;
    for (int i = 0; i < static_cast<int>(rooms.size()); ++i) {
      const Room& rm = rooms[i];
      const bool splittable = rm.rows() >= 2 * min_cells + wall || rm.cols() >= 2 * min_cells + wall;
      if (splittable && (best < 0 || rm.area() > rooms[best].area())) best = i;
    }
    if (best < 0) return {};
    const Room rm = rooms[best];
    const bool can_v = rm.cols() >= 2 * min_cells + wall;
    const bool can_h = rm.rows() >= 2 * min_cells + wall;
    const bool vertical = can_v && (!can_h || rm.cols() >= rm.rows());
    const int len = vertical ? rm.cols() : rm.rows();
    const int offset = uniform_int(rng, min_cells, len - min_cells - wall);
    Room a = rm;
    Room b = rm;
    if (vertical) {
      a.c1 = rm.c0 + offset;
      b.c0 = a.c1 + wall;
    } else {
      a.r1 = rm.r0 + offset;
      b.r0 = a.r1 + wall;
    }
    rooms[best] = a;
    rooms.push_back(b);
  }
  return rooms;
}

// A door between rooms a and b if they face each other across one wall with enough overlap.
std::optional<Door> door_between(const Room& a, const Room& b, int wall, int door_cells) {
  auto centered = [&](int lo, int hi) {
    const int mid = (lo + hi) / 2;
    return std::pair{mid - door_cells / 2, mid - door_cells / 2 + door_cells};
  };
  const int row_lo = std::max(a.r0, b.r0), row_hi = std::min(a.r1, b.r1);
  const int col_lo = std::max(a.c0, b.c0), col_hi = std::min(a.c1, b.c1);
  if (row_hi - row_lo >= door_cells + 2) {
    auto [lo, hi] = centered(row_lo, row_hi);
    if (a.c1 + wall == b.c0) return Door{lo, a.c1, hi, b.c0};
    if (b.c1 + wall == a.c0) return Door{lo, b.c1, hi, a.c0};
  }
  if (col_hi - col_lo >= door_cells + 2) {
    auto [lo, hi] = centered(col_lo, col_hi);
    if (a.r1 + wall == b.r0) return Door{a.r1, lo, b.r0, hi};
    if (b.r1 + wall == a.r0) return Door{b.r1, lo, a.r0, hi};
  }
  return std::nullopt;
}

bool single_component(const std::vector<std::uint8_t>& free, int rows, int cols) {
  std::vector<std::int32_t> labels;
  return label_components(free, rows, cols, labels) == 1;
}

// Builds walls and doors; returns nullopt when the sampled split left rooms disconnected.
std::optional<std::pair<OccupancyGrid, std::vector<Room>>> build_layout(const SceneParams& p, int rows, int cols,
                                                                        Rng& rng) {
  const double cs = p.cell_size;
  const int wall = std::max(1, static_cast<int>(std::lround(p.wall_thickness / cs)));
  const int min_cells = static_cast<int>(std::ceil(p.min_room_size / cs));
  const int door_cells = std::max(static_cast<int>(std::ceil(p.door_width / cs)),
                                  static_cast<int>(std::ceil(2 * (p.agent_radius + cs) / cs)) + 1);

  std::vector<Room> rooms = split_rooms(rows, cols, p.room_count, wall, min_cells, rng);
  if (rooms.empty()) return std::nullopt;

  OccupancyGrid grid(rows, cols, cs);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) grid.set(r, c, true);
  for (const Room& rm : rooms)
    for (int r = rm.r0; r < rm.r1; ++r)
      for (int c = rm.c0; c < rm.c1; ++c) grid.set(r, c, false);

  std::vector<std::pair<std::size_t, std::size_t>> candidates;
  for (std::size_t i = 0; i < rooms.size(); ++i)
    for (std::size_t j = i + 1; j < rooms.size(); ++j)
      if (door_between(rooms[i], rooms[j], wall, door_cells)) candidates.emplace_back(i, j);
  for (std::size_t k = candidates.size(); k > 1; --k)
    std::swap(candidates[k - 1], candidates[uniform_index(rng, k)]);

  DisjointSet sets(rooms.size());
  std::size_t joined = 1;
  for (const auto& [i, j] : candidates) {
    const bool tree_edge = sets.unite(static_cast<int>(i), static_cast<int>(j));
    // A few extra doors create loops so geodesics are not all forced through one door.
    if (!tree_edge && uniform01(rng) >= 0.3) continue;
    if (tree_edge) ++joined;
    const Door d = *door_between(rooms[i], rooms[j], wall, door_cells);
    for (int r = d.r0; r < d.r1; ++r)
      for (int c = d.c0; c < d.c1; ++c) grid.set(r, c, false);
  }
  if (joined != rooms.size()) return std::nullopt;
  if (!single_component(inflate(grid, p.agent_radius), rows, cols)) return std::nullopt;
  return std::pair{std::move(grid), std::move(rooms)};
}

int cells_for(double length, double cs, const char* what) {
  const long n = std::lround(length / cs);
  if (std::abs(static_cast<double>(n) * cs - length) > 1e-6)
    throw ArgumentError(std::string(what) + " must be a multiple of the cell size");
  return static_cast<int>(n);
}

}  // namespace

Scene generate_scene(const SceneParams& p) {
  if (!(p.width >= 4.0) || !(p.height >= 4.0)) throw ArgumentError("scene width and height must be >= 4 m");
  if (!(p.cell_size > 0.0 && p.cell_size <= 0.25)) throw ArgumentError("cell size must lie in (0, 0.25]");
  if (p.room_count < 1) throw ArgumentError("room count must be >= 1");
  if (p.objects_min < 0 || p.objects_max < p.objects_min)
    throw ArgumentError("objects per category range must satisfy 0 <= min <= max");
  const int rows = cells_for(p.height, p.cell_size, "height");
  const int cols = cells_for(p.width, p.cell_size, "width");

  Rng rng(p.seed);
  std::optional<std::pair<OccupancyGrid, std::vector<Room>>> layout;
  for (int attempt = 0; attempt < 50 && !layout; ++attempt) layout = build_layout(p, rows, cols, rng);
  if (!layout)
    throw Error("cannot lay out " + std::to_string(p.room_count) + " connected rooms in a " +
                std::to_string(p.width) + " x " + std::to_string(p.height) + " m scene");
  auto& [grid, rooms] = *layout;

  std::vector<std::uint8_t> free = inflate(grid, p.agent_radius);
  std::vector<ObjectInstance> objects;
  const double cs = p.cell_size;
  const int pad = static_cast<int>(std::ceil(p.agent_radius / cs)) + 1;

  for (const std::string& category : p.vocabulary.names()) {
    const auto shape_it = p.category_table.find(category);
    if (shape_it == p.category_table.end())
      throw ArgumentError("no size defaults for category '" + category + "'");
    const CategoryShape& shape = shape_it->second;
    const int count = uniform_int(rng, p.objects_min, p.objects_max);
    for (int k = 0; k < count; ++k) {
      bool placed = false;
      for (int attempt = 0; attempt < p.placement_retries && !placed; ++attempt) {
        const Room& room = rooms[uniform_index(rng, rooms.size())];
        Obb box;
        box.half_extents = shape.half_extents;
        const double yaw_draw = uniform01(rng);
        box.yaw = yaw_draw < 0.35   ? 0.0
                  : yaw_draw < 0.7 ? round6(std::numbers::pi / 2)
                                   : round6(uniform(rng, 0.0, std::numbers::pi));
        const Vec2 half = box.aabb_half();
        const double x_lo = room.c0 * cs + half.x, x_hi = room.c1 * cs - half.x;
        const double y_lo = room.r0 * cs + half.y, y_hi = room.r1 * cs - half.y;
        if (x_lo >= x_hi || y_lo >= y_hi) continue;
        box.center = {round6(uniform(rng, x_lo, x_hi)), round6(uniform(rng, y_lo, y_hi))};

        const std::vector<Cell> cells = footprint_cells(box, rows, cols, cs);
        if (cells.empty() || std::any_of(cells.begin(), cells.end(),
                                         [&](Cell c) { return grid.obstructed(c.row, c.col); }))
          continue;

        int wr0 = rows, wr1 = -1, wc0 = cols, wc1 = -1;
        for (const Cell& c : cells) {
          wr0 = std::min(wr0, c.row - pad);
          wr1 = std::max(wr1, c.row + pad);
          wc0 = std::min(wc0, c.col - pad);
          wc1 = std::max(wc1, c.col + pad);
        }
        wr0 = std::max(wr0, 0);
        wc0 = std::max(wc0, 0);
        wr1 = std::min(wr1, rows - 1);
        wc1 = std::min(wc1, cols - 1);

        std::vector<std::uint8_t> saved_free;
        for (const Cell& c : cells) grid.set(c.row, c.col, true);
        for (int r = wr0; r <= wr1; ++r)
          for (int c = wc0; c <= wc1; ++c) {
            saved_free.push_back(free[grid.index(r, c)]);
            free[grid.index(r, c)] = disc_clear(grid, grid.center({r, c}), p.agent_radius) ? 1 : 0;
          }
        if (single_component(free, rows, cols)) {
          objects.push_back({category + "_" + std::to_string(k), category, box, shape.z_min, shape.z_max});
          placed = true;
        } else {
          for (const Cell& c : cells) grid.set(c.row, c.col, false);
          std::size_t i = 0;
          for (int r = wr0; r <= wr1; ++r)
            for (int c = wc0; c <= wc1; ++c) free[grid.index(r, c)] = saved_free[i++];
        }
      }
      if (!placed) throw PlacementError(category);
    }
  }

  std::string id = p.scene_id.empty() ? "gen-" + std::to_string(p.seed) : p.scene_id;
  return Scene::create(std::move(id), std::move(grid), std::move(objects), p.seed, p.vocabulary);
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

std::string base64_encode(const std::vector<std::uint8_t>& bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), bytes.data(),
                                static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

std::vector<std::uint8_t> base64_decode(const std::string& text, std::size_t expected) {
  if (text.size() % 4 != 0) throw ValidationError("occupancy", "base64 length is not a multiple of 4");
  std::vector<std::uint8_t> out(3 * (text.size() / 4));
  const int n = EVP_DecodeBlock(out.data(), reinterpret_cast<const unsigned char*>(text.data()),
                                static_cast<int>(text.size()));
  if (n < 0) throw ValidationError("occupancy", "invalid base64");
  // EVP_DecodeBlock keeps the zero bytes produced by '=' padding.
  std::size_t padding = 0;
  if (!text.empty() && text.back() == '=') ++padding;
  if (text.size() > 1 && text[text.size() - 2] == '=') ++padding;
  out.resize(static_cast<std::size_t>(n) - padding);
  if (out.size() != expected)
    throw ValidationError("occupancy", "expected " + std::to_string(expected) + " bytes, got " +
                                           std::to_string(out.size()));
  return out;
}

}  // namespace

std::string scene_to_json(const Scene& scene) {
  const auto& grid = scene.occupancy();
  std::vector<std::uint8_t> packed((grid.size() + 7) / 8, 0);
  for (std::size_t i = 0; i < grid.size(); ++i)
    if (grid.raw()[i]) packed[i / 8] |= static_cast<std::uint8_t>(1u << (i % 8));

  nlohmann::ordered_json doc;
  doc["schema_version"] = "1";
  doc["scene_id"] = scene.id();
  doc["width"] = scene.width();
  doc["height"] = scene.height();
  doc["cell_size"] = round6(scene.cell_size());
  doc["seed"] = scene.seed();
  doc["occupancy"] = base64_encode(packed);
  doc["objects"] = nlohmann::ordered_json::array();
  for (const auto& o : scene.objects()) {
    nlohmann::ordered_json jo;
    jo["instance_id"] = o.instance_id;
    jo["category"] = o.category;
    jo["center"] = {round6(o.obb.center.x), round6(o.obb.center.y)};
    jo["half_extents"] = {round6(o.obb.half_extents.x), round6(o.obb.half_extents.y)};
    jo["yaw"] = round6(o.obb.yaw);
    jo["height_range"] = {round6(o.z_min), round6(o.z_max)};
    doc["objects"].push_back(std::move(jo));
  }
  return doc.dump() + "\n";
}

void save_scene(const Scene& scene, std::ostream& out) { out << scene_to_json(scene); }

Scene scene_from_json(std::string_view text, const CategoryVocabulary& vocabulary) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("scene: ") + e.what(), e.byte);
  }
  try {
    if (doc.at("schema_version").get<std::string>() != "1")
      throw ValidationError("schema_version", "unsupported scene schema version");
    const double cs = doc.at("cell_size").get<double>();
    const double width = doc.at("width").get<double>();
    const double height = doc.at("height").get<double>();
    if (!(cs > 0)) throw ValidationError("dimensions", "cell_size must be positive");
    const long cols = std::lround(width / cs);
    const long rows = std::lround(height / cs);
    if (std::abs(cols * cs - width) > 1e-6 || std::abs(rows * cs - height) > 1e-6)
      throw ValidationError("dimensions", "width and height must be whole multiples of cell_size");
    if (rows < 3 || cols < 3 || rows * cols > 100'000'000L)
      throw ValidationError("dimensions", "grid size out of range");

    OccupancyGrid grid(static_cast<int>(rows), static_cast<int>(cols), cs);
    const auto packed = base64_decode(doc.at("occupancy").get<std::string>(), (grid.size() + 7) / 8);
    for (int r = 0; r < grid.rows(); ++r)
      for (int c = 0; c < grid.cols(); ++c) {
        const std::size_t i = grid.index(r, c);
        grid.set(r, c, (packed[i / 8] >> (i % 8)) & 1u);
      }

    std::vector<ObjectInstance> objects;
    for (const auto& jo : doc.at("objects")) {
      ObjectInstance o;
      o.instance_id = jo.at("instance_id").get<std::string>();
      o.category = jo.at("category").get<std::string>();
      o.obb.center = {jo.at("center").at(0).get<double>(), jo.at("center").at(1).get<double>()};
      o.obb.half_extents = {jo.at("half_extents").at(0).get<double>(), jo.at("half_extents").at(1).get<double>()};
      o.obb.yaw = jo.at("yaw").get<double>();
      o.z_min = jo.at("height_range").at(0).get<double>();
      o.z_max = jo.at("height_range").at(1).get<double>();
      objects.push_back(std::move(o));
    }
    return Scene::create(doc.at("scene_id").get<std::string>(), std::move(grid), std::move(objects),
                         doc.at("seed").get<std::uint64_t>(), vocabulary);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("schema", e.what());
  }
}

Scene load_scene(std::istream& in, const CategoryVocabulary& vocabulary) {
  std::ostringstream buf;
  buf << in.rdbuf();
  return scene_from_json(buf.str(), vocabulary);
}

}  // namespace objnav

#include "objnav/nav.hpp"

#include <algorithm>
#include <array>
#include <queue>

namespace objnav {

NavGrid::NavGrid(const Scene& scene, double radius)
    : scene_id_(scene.id()), radius_(radius), occupancy_(scene.occupancy()),
      free_(inflate(scene.occupancy(), radius)) {}

std::size_t NavGrid::free_count() const {
  return static_cast<std::size_t>(std::count(free_.begin(), free_.end(), std::uint8_t{1}));
}

bool NavGrid::navigable(Vec2 p) const {
  const double w = cols() * cell_size();
  const double h = rows() * cell_size();
  if (!(p.x >= 0 && p.y >= 0 && p.x <= w && p.y <= h)) return false;
  return disc_clear(occupancy_, p, radius_);
}

std::optional<Cell> NavGrid::snap(Vec2 p) const {
  const Cell base = occupancy_.cell_of(p);
  std::optional<Cell> best;
  double best_d = snap_tolerance();
  for (int dr = -2; dr <= 2; ++dr) {
    for (int dc = -2; dc <= 2; ++dc) {
      const Cell c{base.row + dr, base.col + dc};
      if (!free(c)) continue;
      const double d = distance(center(c), p);
      if (d < best_d || (d == best_d && best && c < *best)) {
        best_d = d;
        best = c;
      }
    }
  }
  return best;
}

NavGrid build_navgrid(const Scene& scene, double radius) {
  if (!(radius > 0)) throw ArgumentError("navgrid radius must be positive");
  NavGrid grid(scene, radius);
  if (grid.free_count() == 0)
    throw ArgumentError("no cell of scene '" + scene.id() + "' admits radius " + std::to_string(radius));
  return grid;
}

double GeodesicField::at(const NavGrid& grid, Vec2 p) const {
  const auto c = grid.snap(p);
  return c ? at(*c) : kInfinity;
}

namespace {

constexpr std::array<std::array<int, 2>, 8> kSteps = {{
    {{0, 1}}, {{0, -1}}, {{1, 0}}, {{-1, 0}}, {{1, 1}}, {{1, -1}}, {{-1, 1}}, {{-1, -1}},
}};

}  // namespace

GeodesicField geodesic_field(const NavGrid& grid, std::span<const Cell> goals, double cutoff) {
  if (goals.empty()) throw ArgumentError("geodesic field needs at least one goal cell");
  GeodesicField field;
  field.rows = grid.rows();
  field.cols = grid.cols();
  field.cell_size = grid.cell_size();
  field.dist.assign(grid.size(), kInfinity);
  field.next.assign(grid.size(), -1);

  using Entry = std::pair<double, std::int32_t>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
  for (const Cell& g : goals) {
    if (!grid.free(g))
      throw ArgumentError("goal cell (" + std::to_string(g.row) + "," + std::to_string(g.col) + ") is not free");
    const auto i = static_cast<std::int32_t>(grid.index(g));
    if (field.dist[i] != 0.0) {
      field.dist[i] = 0.0;
      open.emplace(0.0, i);
    }
  }

  const double straight = grid.cell_size();
  const double diagonal = grid.cell_size() * std::numbers::sqrt2;
  while (!open.empty()) {
    const auto [d, i] = open.top();
    open.pop();
    if (d > field.dist[i]) continue;
    if (d > cutoff) {
      field.dist[i] = kInfinity;
      field.next[i] = -1;
      continue;
    }
    const Cell c = grid.cell_at(static_cast<std::size_t>(i));
    for (const auto& [dr, dc] : kSteps) {
      const Cell n{c.row + dr, c.col + dc};
      if (!grid.free(n)) continue;
      const bool diag = dr != 0 && dc != 0;
      if (diag && (!grid.free(c.row + dr, c.col) || !grid.free(c.row, c.col + dc))) continue;
      const double nd = d + (diag ? diagonal : straight);
      const auto ni = static_cast<std::int32_t>(grid.index(n));
      if (nd < field.dist[ni]) {
        field.dist[ni] = nd;
        field.next[ni] = i;
        open.emplace(nd, ni);
      }
    }
  }
  if (cutoff != kInfinity) {
    for (std::size_t i = 0; i < field.dist.size(); ++i)
      if (field.dist[i] > cutoff) {
        field.dist[i] = kInfinity;
        field.next[i] = -1;
      }
  }
  return field;
}

std::vector<Cell> snap_targets(const NavGrid& grid, std::span<const Vec2> to_points) {
  if (to_points.empty()) throw ArgumentError("geodesic query needs at least one target point");
  std::vector<Cell> cells;
  cells.reserve(to_points.size());
  for (const Vec2& p : to_points) {
    const auto c = grid.snap(p);
    if (!c)
      throw ArgumentError("target (" + std::to_string(p.x) + ", " + std::to_string(p.y) +
                          ") has no free cell within one cell");
    cells.push_back(*c);
  }
  return cells;
}

namespace {

Cell snap_start(const NavGrid& grid, Vec2 from) {
  if (!grid.navigable(from))
    throw ArgumentError("start (" + std::to_string(from.x) + ", " + std::to_string(from.y) +
                        ") is not navigable at radius " + std::to_string(grid.radius()));
  const auto c = grid.snap(from);
  if (!c) throw ArgumentError("start has no free cell within one cell");
  return *c;
}

}  // namespace

double geodesic_distance(const NavGrid& grid, Vec2 from, std::span<const Vec2> to_points) {
  const auto targets = snap_targets(grid, to_points);
  const Cell start = snap_start(grid, from);
  return geodesic_field(grid, targets).at(start);
}

double polyline_length(std::span<const Vec2> polyline) {
  double len = 0.0;
  for (std::size_t i = 1; i < polyline.size(); ++i) len += distance(polyline[i - 1], polyline[i]);
  return len;
}

std::vector<Vec2> string_pull(const NavGrid& grid, std::vector<Vec2> chain) {
  bool changed = true;
  while (changed && chain.size() > 2) {
    changed = false;
    std::vector<Vec2> out;
    out.reserve(chain.size());
    out.push_back(chain.front());
    for (std::size_t i = 1; i + 1 < chain.size(); ++i) {
      if (segment_clear(grid.occupancy(), out.back(), chain[i + 1], grid.radius())) {
        changed = true;
        continue;
      }
      out.push_back(chain[i]);
    }
    out.push_back(chain.back());
    chain = std::move(out);
  }
  return chain;
}

std::vector<Vec2> path_from_field(const NavGrid& grid, const GeodesicField& field, Cell start) {
  if (field.at(start) == kInfinity) throw ArgumentError("no path from start to any target");
  std::vector<Vec2> chain;
  auto i = static_cast<std::int32_t>(grid.index(start));
  chain.push_back(grid.center(start));
  while (field.next[i] >= 0) {
    i = field.next[i];
    chain.push_back(grid.center(grid.cell_at(static_cast<std::size_t>(i))));
  }
  return string_pull(grid, std::move(chain));
}

std::vector<Vec2> shortest_path(const NavGrid& grid, Vec2 from, std::span<const Vec2> to_points) {
  const auto targets = snap_targets(grid, to_points);
  const Cell start = snap_start(grid, from);
  return path_from_field(grid, geodesic_field(grid, targets), start);
}

int action_path_length(std::span<const Vec2> polyline, const ActionQuanta& quanta, double initial_heading) {
  constexpr double eps = 1e-9;
  // Merge consecutive collinear segments into straight runs.
  struct Run {
    double heading;
    double length;
  };
  std::vector<Run> runs;
  for (std::size_t i = 1; i < polyline.size(); ++i) {
    const Vec2 d = polyline[i] - polyline[i - 1];
    const double len = norm(d);
    if (len <= eps) continue;
    const double h = std::atan2(d.y, d.x);
    if (!runs.empty() && std::abs(wrap_angle(h - runs.back().heading)) <= 1e-9) {
      runs.back().length += len;
    } else {
      runs.push_back({h, len});
    }
  }

  int actions = 1;  // STOP
  double heading = initial_heading;
  const double turn = deg_to_rad(quanta.turn_deg);
  for (const Run& run : runs) {
    const double delta = std::abs(wrap_angle(run.heading - heading));
    actions += static_cast<int>(std::ceil(delta / turn - eps));
    actions += static_cast<int>(std::ceil(run.length / quanta.step - eps));
    heading = run.heading;
  }
  return actions;
}

}  // namespace objnav

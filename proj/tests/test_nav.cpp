#include <gtest/gtest.h>

#include <queue>

#include "objnav/nav.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace objnav;
using namespace objnav::testing;

namespace {

// A* with the octile heuristic, written independently of the field code.
double astar(const NavGrid& grid, Cell from, Cell to) {
  const double cs = grid.cell_size();
  auto h = [&](Cell c) {
    const double dx = std::abs(c.col - to.col);
    const double dy = std::abs(c.row - to.row);
    return cs * (std::max(dx, dy) + (std::numbers::sqrt2 - 1) * std::min(dx, dy));
  };
  std::vector<double> g(grid.size(), kInfinity);
  using Entry = std::pair<double, Cell>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
  g[grid.index(from)] = 0;
  open.emplace(h(from), from);
  while (!open.empty()) {
    const auto [f, c] = open.top();
    open.pop();
    if (c == to) return g[grid.index(c)];
    if (f > g[grid.index(c)] + h(c) + 1e-12) continue;
    for (int dr = -1; dr <= 1; ++dr)
      for (int dc = -1; dc <= 1; ++dc) {
        const Cell n{c.row + dr, c.col + dc};
        if ((dr == 0 && dc == 0) || !grid.free(n)) continue;
        const bool diag = dr && dc;
        if (diag && !(grid.free(c.row + dr, c.col) && grid.free(c.row, c.col + dc))) continue;
        const double nd = g[grid.index(c)] + (diag ? cs * std::numbers::sqrt2 : cs);
        if (nd < g[grid.index(n)]) {
          g[grid.index(n)] = nd;
          open.emplace(nd + h(n), n);
        }
      }
  }
  return kInfinity;
}

}  // namespace

TEST(Geodesic, DijkstraMatchesBellmanFordExactly) {
  Rng rng(101);
  for (int trial = 0; trial < 100; ++trial) {
    const int rows = uniform_int(rng, 3, 25);
    const int cols = uniform_int(rng, 3, 25);
    const Scene scene = random_grid_scene(rng, rows, cols, uniform(rng, 0.0, 0.45));
    const NavGrid grid(scene, 0.02);
    const auto cells = free_cells(grid);
    if (cells.empty()) continue;
    std::vector<Cell> sources;
    const int k = uniform_int(rng, 1, 3);
    for (int i = 0; i < k; ++i) sources.push_back(cells[uniform_index(rng, cells.size())]);
    const auto field = geodesic_field(grid, sources);
    const auto reference = bellman_ford(grid, sources);
    ASSERT_EQ(field.dist, reference) << "trial " << trial;
  }
}

TEST(Geodesic, AgreesWithAStarAndIsSymmetric) {
  Rng rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    const Scene scene = random_grid_scene(rng, 25, 25, 0.3);
    const NavGrid grid(scene, 0.02);
    const auto cells = free_cells(grid);
    if (cells.size() < 2) continue;
    const Cell a = cells[uniform_index(rng, cells.size())];
    const Cell b = cells[uniform_index(rng, cells.size())];
    const Cell ga[] = {a};
    const Cell gb[] = {b};
    const double ab = geodesic_field(grid, gb).at(a);
    const double ba = geodesic_field(grid, ga).at(b);
    if (std::isinf(ab) || std::isinf(ba)) {
      EXPECT_EQ(ab, ba);
    } else {
      EXPECT_NEAR(ab, ba, 1e-12);
    }
    const double ref = astar(grid, a, b);
    if (std::isinf(ref)) {
      EXPECT_TRUE(std::isinf(ab));
    } else {
      EXPECT_NEAR(ab, ref, 1e-12);
    }
  }
}

TEST(Geodesic, NeverShorterThanStraightLine) {
  const Scene scene = generate_scene(small_params(3));
  const NavGrid grid = build_navgrid(scene);
  const auto cells = free_cells(grid);
  Rng rng(9);
  for (int i = 0; i < 200; ++i) {
    const Cell a = cells[uniform_index(rng, cells.size())];
    const Cell ga[] = {a};
    const auto field = geodesic_field(grid, ga);
    for (int j = 0; j < 50; ++j) {
      const Cell b = cells[uniform_index(rng, cells.size())];
      const double g = field.at(b);
      if (std::isfinite(g)) EXPECT_GE(g + 1e-12, distance(grid.center(a), grid.center(b)));
    }
  }
}

TEST(Geodesic, CutoffLeavesFarCellsUnreached) {
  const Scene scene = simple_scene();
  const NavGrid grid = build_navgrid(scene);
  const auto goal = grid.snap({1.0, 1.0});
  ASSERT_TRUE(goal);
  const Cell goals[] = {*goal};
  const auto full = geodesic_field(grid, goals);
  const auto cut = geodesic_field(grid, goals, 1.5);
  for (std::size_t i = 0; i < full.dist.size(); ++i) {
    if (full.dist[i] <= 1.5) {
      EXPECT_EQ(cut.dist[i], full.dist[i]);
    } else {
      EXPECT_EQ(cut.dist[i], kInfinity);
    }
  }
}

TEST(Geodesic, ThrowsOnBadQueries) {
  const Scene scene = simple_scene();
  const NavGrid grid = build_navgrid(scene);
  const Vec2 none[] = {{0.0, 0.0}};
  const Vec2 goal[] = {{1.0, 1.0}};
  EXPECT_THROW(geodesic_distance(grid, {1.0, 1.0}, std::span<const Vec2>{}), ArgumentError);
  EXPECT_THROW(geodesic_distance(grid, {1.0, 1.0}, none), ArgumentError);
  EXPECT_THROW(geodesic_distance(grid, {3.0, 2.0}, goal), ArgumentError);  // inside the chair
  EXPECT_THROW(build_navgrid(scene, 0.0), ArgumentError);
  EXPECT_THROW(build_navgrid(scene, 5.0), ArgumentError);
}

TEST(Geodesic, OpenRoomDistanceIsOctile) {
  const Scene scene = scene_with("open", walled_room(40, 40, 0.05), {});
  const NavGrid grid = build_navgrid(scene, 0.18);
  const Cell a{10, 10};
  const Cell b{20, 25};
  const Cell goals[] = {b};
  const double expected = 0.05 * (10 * std::numbers::sqrt2 + 5);
  EXPECT_NEAR(geodesic_field(grid, goals).at(a), expected, 1e-12);
}

TEST(Snap, PicksNearestFreeCenterWithinTolerance) {
  const Scene scene = simple_scene();
  const NavGrid grid = build_navgrid(scene);
  const Vec2 p{1.012, 1.013};
  const auto c = grid.snap(p);
  ASSERT_TRUE(c);
  EXPECT_EQ(*c, grid.occupancy().cell_of(p));
  Rng rng(2);
  for (int i = 0; i < 2000; ++i) {
    const Vec2 q{uniform(rng, 0.0, 6.0), uniform(rng, 0.0, 4.0)};
    const auto s = grid.snap(q);
    EXPECT_EQ(s.has_value(), snaps_by_scan(grid, q));
    if (s) {
      EXPECT_LE(distance(grid.center(*s), q), grid.snap_tolerance());
      for (int r = 0; r < grid.rows(); ++r)
        for (int col = 0; col < grid.cols(); ++col)
          if (grid.free(r, col)) EXPECT_GE(distance(grid.center({r, col}), q), distance(grid.center(*s), q));
    }
  }
}

TEST(Snap, NavigabilityMatchesCellScan) {
  const Scene scene = simple_scene();
  const NavGrid grid = build_navgrid(scene);
  Rng rng(4);
  for (int i = 0; i < 3000; ++i) {
    const Vec2 q{uniform(rng, 0.0, 6.0), uniform(rng, 0.0, 4.0)};
    EXPECT_EQ(grid.navigable(q), navigable_by_scan(scene.occupancy(), q, grid.radius()));
  }
  EXPECT_FALSE(grid.navigable({-1.0, 1.0}));
}

TEST(Path, StringPulledSegmentsAreClearAndShort) {
  const Scene scene = simple_scene();
  const NavGrid grid = build_navgrid(scene);
  const Vec2 goal[] = {{4.5, 2.0}};
  const Vec2 start{1.0, 2.0};
  const auto path = shortest_path(grid, start, goal);
  ASSERT_GE(path.size(), 3u);  // the chair sits on the straight line
  for (std::size_t i = 1; i < path.size(); ++i)
    EXPECT_TRUE(segment_clear(grid.occupancy(), path[i - 1], path[i], grid.radius()));
  const double geo = geodesic_distance(grid, start, goal);
  EXPECT_LE(polyline_length(path), geo + 1e-9);
  EXPECT_GE(polyline_length(path), distance(path.front(), path.back()) - 1e-12);
  // No interior vertex can be dropped.
  for (std::size_t i = 1; i + 1 < path.size(); ++i)
    EXPECT_FALSE(segment_clear(grid.occupancy(), path[i - 1], path[i + 1], grid.radius()));
}

TEST(ActionCount, CountsForwardsTurnsAndStop) {
  const ActionQuanta q;
  const std::vector<Vec2> none;
  EXPECT_EQ(action_path_length(none, q, 0.0), 1);
  const std::vector<Vec2> straight = {{0, 0}, {1, 0}};
  EXPECT_EQ(action_path_length(straight, q, 0.0), 5);
  const std::vector<Vec2> partial = {{0, 0}, {0.3, 0}};
  EXPECT_EQ(action_path_length(partial, q, 0.0), 3);
  // Facing +x, path goes +y: three 30-degree turns first.
  const std::vector<Vec2> up = {{0, 0}, {0, 0.5}};
  EXPECT_EQ(action_path_length(up, q, 0.0), 6);
  // Collinear pieces merge: 0.1 + 0.15 is one forward step, not two.
  const std::vector<Vec2> pieces = {{0, 0}, {0.1, 0}, {0.25, 0}};
  EXPECT_EQ(action_path_length(pieces, q, 0.0), 2);
  // An L-shaped path: 1 m east, turn 90 left, 0.5 m north.
  const std::vector<Vec2> ell = {{0, 0}, {1, 0}, {1, 0.5}};
  EXPECT_EQ(action_path_length(ell, q, 0.0), 4 + 3 + 2 + 1);
  // A 45-degree change still needs two 30-degree turns.
  const std::vector<Vec2> diag = {{0, 0}, {1, 1}};
  EXPECT_EQ(action_path_length(diag, q, 0.0), 2 + 6 + 1);
}

#include <gtest/gtest.h>

#include <deque>
#include <random>
#include <set>
#include <sstream>

#include "objnav/scene.hpp"
#include "support.hpp"

using namespace objnav;
using namespace objnav::testing;

namespace {

// Minimum over a dense boundary sampling, or 0 when the point is inside.
double obb_distance_by_sampling(Vec2 p, const Obb& box, int samples) {
  const Vec2 l = box.to_local(p);
  if (std::abs(l.x) <= box.half_extents.x && std::abs(l.y) <= box.half_extents.y) return 0.0;
  double best = 1e300;
  for (int k = 0; k < samples; ++k) best = std::min(best, distance(p, box.boundary_point(box.perimeter() * k / samples)));
  return best;
}

// Area of the oriented box clipped to an axis-aligned square (Sutherland-Hodgman).
double clipped_area(const Obb& box, const Aabb& sq) {
  std::vector<Vec2> poly;
  for (Vec2 c : {Vec2{1, 1}, Vec2{-1, 1}, Vec2{-1, -1}, Vec2{1, -1}})
    poly.push_back(box.to_world({c.x * box.half_extents.x, c.y * box.half_extents.y}));
  auto clip = [&](auto inside, auto intersect) {
    std::vector<Vec2> out;
    for (std::size_t i = 0; i < poly.size(); ++i) {
      const Vec2 a = poly[i];
      const Vec2 b = poly[(i + 1) % poly.size()];
      if (inside(b)) {
        if (!inside(a)) out.push_back(intersect(a, b));
        out.push_back(b);
      } else if (inside(a)) {
        out.push_back(intersect(a, b));
      }
    }
    poly = out;
  };
  auto at_x = [](double x) {
    return [x](Vec2 a, Vec2 b) { return Vec2{x, a.y + (b.y - a.y) * (x - a.x) / (b.x - a.x)}; };
  };
  auto at_y = [](double y) {
    return [y](Vec2 a, Vec2 b) { return Vec2{a.x + (b.x - a.x) * (y - a.y) / (b.y - a.y), y}; };
  };
  clip([&](Vec2 p) { return p.x >= sq.lo.x; }, at_x(sq.lo.x));
  clip([&](Vec2 p) { return p.x <= sq.hi.x; }, at_x(sq.hi.x));
  clip([&](Vec2 p) { return p.y >= sq.lo.y; }, at_y(sq.lo.y));
  clip([&](Vec2 p) { return p.y <= sq.hi.y; }, at_y(sq.hi.y));
  double area = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) area += cross(poly[i], poly[(i + 1) % poly.size()]);
  return std::abs(area) / 2.0;
}

OccupancyGrid random_grid(std::mt19937_64& rng, int rows, int cols, double density) {
  OccupancyGrid g = walled_room(rows, cols, 0.05);
  std::bernoulli_distribution coin(density);
  for (int r = 1; r < rows - 1; ++r)
    for (int c = 1; c < cols - 1; ++c)
      if (coin(rng)) g.set(r, c, true);
  return g;
}

}  // namespace

TEST(Geometry, WrapAngleRange) {
  EXPECT_DOUBLE_EQ(wrap_angle(std::numbers::pi), std::numbers::pi);
  EXPECT_DOUBLE_EQ(wrap_angle(-std::numbers::pi), std::numbers::pi);
  EXPECT_NEAR(wrap_angle(7 * std::numbers::pi / 2), -std::numbers::pi / 2, 1e-12);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-100, 100);
  for (int i = 0; i < 1000; ++i) {
    const double a = u(rng);
    const double w = wrap_angle(a);
    EXPECT_GT(w, -std::numbers::pi);
    EXPECT_LE(w, std::numbers::pi);
    EXPECT_NEAR(std::cos(w), std::cos(a), 1e-9);
    EXPECT_NEAR(std::sin(w), std::sin(a), 1e-9);
  }
}

TEST(Geometry, Round6) {
  EXPECT_EQ(round6(1.0000004), 1.0);
  EXPECT_EQ(round6(0.1234565000001), 0.123457);
  EXPECT_FALSE(std::signbit(round6(-1e-9)));
}

TEST(Geometry, DistanceToObbMatchesBoundarySampling) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> pos(-3, 3), ext(0.05, 1.0), yaw(-4, 4);
  constexpr int kSamples = 100'000;
  for (int trial = 0; trial < 20; ++trial) {
    const Obb box{{pos(rng), pos(rng)}, {ext(rng), ext(rng)}, yaw(rng)};
    const double spacing = box.perimeter() / kSamples;
    for (int i = 0; i < 10; ++i) {
      const Vec2 p{pos(rng), pos(rng)};
      EXPECT_NEAR(distance_to_obb(p, box), obb_distance_by_sampling(p, box, kSamples), spacing);
    }
  }
}

TEST(Geometry, SegmentDistanceToAabbMatchesSampling) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-2, 2);
  const Aabb box{{-0.3, -0.2}, {0.4, 0.5}};
  for (int i = 0; i < 500; ++i) {
    const Vec2 a{u(rng), u(rng)}, b{u(rng), u(rng)};
    double best = 1e300;
    for (int k = 0; k <= 20000; ++k) best = std::min(best, distance_to_aabb(a + (k / 20000.0) * (b - a), box));
    EXPECT_NEAR(segment_distance_to_aabb(a, b, box), best, distance(a, b) / 20000.0 + 1e-12);
  }
}

TEST(Scene, NavigabilityMatchesBruteForceCellScan) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 10; ++trial) {
    const OccupancyGrid g = random_grid(rng, 30, 40, 0.08);
    const Scene scene = Scene::create("nav", g, {}, 0);
    std::uniform_real_distribution<double> ux(0, scene.width()), uy(0, scene.height());
    for (int i = 0; i < 500; ++i) {
      const Vec2 p{ux(rng), uy(rng)};
      const double radius = 0.18;
      bool expected = true;
      for (int r = 0; r < g.rows() && expected; ++r)
        for (int c = 0; c < g.cols() && expected; ++c) {
          if (!g.obstructed(r, c)) continue;
          const double dx = std::max({c * 0.05 - p.x, 0.0, p.x - (c + 1) * 0.05});
          const double dy = std::max({r * 0.05 - p.y, 0.0, p.y - (r + 1) * 0.05});
          if (std::sqrt(dx * dx + dy * dy) < radius) expected = false;
        }
      EXPECT_EQ(is_navigable(scene, p, radius), expected) << p.x << "," << p.y;
    }
  }
}

TEST(Scene, NavigabilityOutsideSceneThrows) {
  const Scene scene = simple_scene();
  EXPECT_THROW(is_navigable(scene, {-0.1, 1.0}, 0.18), ArgumentError);
  EXPECT_THROW(is_navigable(scene, {1.0, scene.height() + 0.01}, 0.18), ArgumentError);
}

TEST(Scene, RaycastMatchesFineStepping) {
  std::mt19937_64 rng(8);
  constexpr double kStep = 1e-5;
  for (int trial = 0; trial < 5; ++trial) {
    const OccupancyGrid g = random_grid(rng, 40, 40, 0.05);
    const Scene scene = Scene::create("ray", g, {}, 0);
    std::uniform_real_distribution<double> u(0.06, 1.94), ang(-4, 4);
    for (int i = 0; i < 40; ++i) {
      const Vec2 o{u(rng), u(rng)};
      if (g.obstructed(g.cell_of(o).row, g.cell_of(o).col)) continue;
      const Vec2 dir = unit_from_angle(ang(rng));
      const RayHit hit = raycast(scene, o, dir, 6.0);
      double expected = 6.0;
      for (double t = 0; t <= 6.0; t += kStep) {
        const Cell c = g.cell_of(o + t * dir);
        if (g.obstructed(c.row, c.col)) {
          expected = t;
          break;
        }
      }
      ASSERT_TRUE(hit.hit);
      EXPECT_NEAR(hit.range, expected, 2 * kStep);
    }
  }
}

TEST(Scene, RaycastReportsHitInstanceAndRejectsNonUnit) {
  const Scene scene = simple_scene();
  const RayHit hit = raycast(scene, {1.0, 2.0}, {1.0, 0.0}, 10.0);
  ASSERT_TRUE(hit.hit);
  EXPECT_EQ(hit.hit_instance, "chair_0");
  EXPECT_NEAR(hit.range, 1.75, 1e-12);
  const RayHit wall = raycast(scene, {1.0, 1.0}, {0.0, -1.0}, 10.0);
  EXPECT_FALSE(wall.hit_instance.has_value());
  EXPECT_NEAR(wall.range, 0.95, 1e-12);
  const RayHit none = raycast(scene, {1.0, 1.0}, {0.0, -1.0}, 0.5);
  EXPECT_FALSE(none.hit);
  EXPECT_THROW(raycast(scene, {1, 1}, {1, 1}, 1.0), ArgumentError);
}

TEST(Scene, FootprintCellsMatchClippedArea) {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> pos(0.5, 1.5), ext(0.03, 0.4), yaw(-3.2, 3.2);
  constexpr double cs = 0.05;
  for (int trial = 0; trial < 200; ++trial) {
    const Obb box{{pos(rng), pos(rng)}, {ext(rng), ext(rng)}, trial % 4 == 0 ? 0.0 : yaw(rng)};
    const auto cells = footprint_cells(box, 40, 40, cs);
    std::set<Cell> got(cells.begin(), cells.end());
    for (int r = 0; r < 40; ++r)
      for (int c = 0; c < 40; ++c) {
        const double area = clipped_area(box, {{c * cs, r * cs}, {(c + 1) * cs, (r + 1) * cs}});
        if (area > 1e-10) EXPECT_TRUE(got.contains({r, c})) << r << "," << c << " area " << area;
        if (area == 0.0) EXPECT_FALSE(got.contains({r, c})) << r << "," << c;
      }
  }
}

TEST(Scene, CreateNamesViolatedInvariant) {
  auto expect_invariant = [](const std::string& name, auto&& fn) {
    try {
      fn();
      ADD_FAILURE() << "expected " << name;
    } catch (const ValidationError& e) {
      EXPECT_EQ(e.invariant(), name) << e.what();
    }
  };
  const auto room = walled_room(40, 40, 0.05);
  expect_invariant("boundary_closed", [&] {
    auto g = room;
    g.set(0, 5, false);
    Scene::create("s", g, {}, 0);
  });
  expect_invariant("footprint_obstructed", [&] {
    Scene::create("s", room, {make_object("chair_0", "chair", {{1, 1}, {0.2, 0.2}, 0}, 0, 1)}, 0);
  });
  expect_invariant("category_in_vocabulary", [&] {
    scene_with("s", room, {make_object("x_0", "spaceship", {{1, 1}, {0.2, 0.2}, 0}, 0, 1)});
  });
  expect_invariant("unique_instance_id", [&] {
    scene_with("s", room,
               {make_object("a", "chair", {{0.5, 0.5}, {0.1, 0.1}, 0}, 0, 1),
                make_object("a", "chair", {{1.5, 1.5}, {0.1, 0.1}, 0}, 0, 1)});
  });
  expect_invariant("height_range", [&] {
    scene_with("s", room, {make_object("a", "chair", {{1, 1}, {0.1, 0.1}, 0}, 1.0, 0.5)});
  });
}

TEST(Scene, SaveLoadRoundTripIsExact) {
  const Scene scene = generate_scene(small_params(4));
  const std::string text = scene_to_json(scene);
  const Scene back = scene_from_json(text);
  EXPECT_TRUE(back == scene);
  EXPECT_EQ(scene_to_json(back), text);
}

TEST(Scene, LoadReportsByteOffsetOfSyntaxError) {
  const std::string text = scene_to_json(simple_scene());
  const std::size_t at = text.find(",\"width\"");
  ASSERT_NE(at, std::string::npos);
  const std::string broken = text.substr(0, at) + "@" + text.substr(at);
  try {
    scene_from_json(broken);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_GE(e.position(), at);
    EXPECT_LE(e.position(), at + 2);
  }
  EXPECT_THROW(scene_from_json(R"({"schema_version":"1"})"), ValidationError);
}

TEST(SceneGen, DeterministicInSeed) {
  const Scene a = generate_scene(small_params(17));
  const Scene b = generate_scene(small_params(17));
  const Scene c = generate_scene(small_params(18));
  EXPECT_EQ(scene_to_json(a), scene_to_json(b));
  EXPECT_NE(scene_to_json(a), scene_to_json(c));
}

// Every free cell of the inflated grid is reachable from every other (independent BFS).
TEST(SceneGen, InflatedFreeSpaceIsConnected) {
  for (std::uint64_t seed : {1u, 2u, 3u, 4u, 5u}) {
    SceneParams p = small_params(seed);
    p.objects_min = 1;
    const Scene scene = generate_scene(p);
    const auto free = inflate(scene.occupancy(), p.agent_radius);
    const int rows = scene.rows();
    const int cols = scene.cols();
    auto is_free = [&](int r, int c) {
      return r >= 0 && c >= 0 && r < rows && c < cols && free[static_cast<std::size_t>(r) * cols + c];
    };
    std::vector<char> seen(free.size(), 0);
    std::deque<std::pair<int, int>> queue;
    std::size_t total = 0;
    for (std::size_t i = 0; i < free.size(); ++i) total += free[i];
    ASSERT_GT(total, 0u);
    for (std::size_t i = 0; i < free.size(); ++i)
      if (free[i]) {
        queue.emplace_back(static_cast<int>(i) / cols, static_cast<int>(i) % cols);
        seen[i] = 1;
        break;
      }
    std::size_t reached = 0;
    while (!queue.empty()) {
      const auto [r, c] = queue.front();
      queue.pop_front();
      ++reached;
      for (int dr = -1; dr <= 1; ++dr)
        for (int dc = -1; dc <= 1; ++dc) {
          if (!dr && !dc) continue;
          if (!is_free(r + dr, c + dc)) continue;
          if (dr && dc && (!is_free(r + dr, c) || !is_free(r, c + dc))) continue;
          const std::size_t k = static_cast<std::size_t>(r + dr) * cols + (c + dc);
          if (!seen[k]) {
            seen[k] = 1;
            queue.emplace_back(r + dr, c + dc);
          }
        }
    }
    EXPECT_EQ(reached, total) << "seed " << seed;
  }
}

TEST(SceneGen, ObjectsAreInVocabularyOrderWithObstructedFootprints) {
  const Scene scene = generate_scene(small_params(9));
  const auto& vocab = CategoryVocabulary::mp3d().names();
  std::size_t last = 0;
  for (const auto& o : scene.objects()) {
    const auto pos = static_cast<std::size_t>(std::find(vocab.begin(), vocab.end(), o.category) - vocab.begin());
    ASSERT_LT(pos, vocab.size());
    EXPECT_GE(pos, last);
    last = pos;
    for (const Cell& c : footprint_cells(o.obb, scene.rows(), scene.cols(), scene.cell_size()))
      EXPECT_TRUE(scene.occupancy().obstructed(c.row, c.col));
  }
}

TEST(SceneGen, VocabularyHas21Categories) {
  const auto& v = CategoryVocabulary::mp3d();
  ASSERT_EQ(v.size(), 21u);
  EXPECT_EQ(v.names().front(), "chair");
  EXPECT_EQ(v.names().back(), "clothes");
  EXPECT_TRUE(v.contains("tv_monitor"));
}

TEST(SceneGen, CategoryTableOverrides) {
  std::istringstream in(R"({"chair": {"half_extents": [0.3, 0.2], "height_range": [0.0, 1.1]}})");
  const CategoryTable t = load_category_table(in);
  EXPECT_EQ(t.at("chair").half_extents, (Vec2{0.3, 0.2}));
  EXPECT_EQ(t.at("chair").z_max, 1.1);
  EXPECT_EQ(t.at("sofa").z_max, default_category_table().at("sofa").z_max);
}

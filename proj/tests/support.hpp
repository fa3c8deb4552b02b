#pragma once

#include <string>
#include <vector>

#include "objnav/episodes.hpp"
#include "objnav/scene.hpp"
#include "objnav/sim.hpp"

namespace objnav::testing {

// Empty rectangular room with a one-cell wall on the border.
inline OccupancyGrid walled_room(int rows, int cols, double cell_size) {
  OccupancyGrid g(rows, cols, cell_size);
  for (int r = 0; r < rows; ++r) {
    g.set(r, 0, true);
    g.set(r, cols - 1, true);
  }
  for (int c = 0; c < cols; ++c) {
    g.set(0, c, true);
    g.set(rows - 1, c, true);
  }
  return g;
}

inline void fill_cells(OccupancyGrid& g, int r0, int c0, int r1, int c1) {
  for (int r = r0; r <= r1; ++r)
    for (int c = c0; c <= c1; ++c) g.set(r, c, true);
}

inline ObjectInstance make_object(std::string id, std::string category, Obb obb, double z0, double z1) {
  return {std::move(id), std::move(category), obb, z0, z1};
}

// Marks every footprint cell of each object and builds the scene.
inline Scene scene_with(std::string id, OccupancyGrid g, std::vector<ObjectInstance> objects, std::uint64_t seed = 0) {
  for (const auto& o : objects)
    for (const Cell& c : footprint_cells(o.obb, g.rows(), g.cols(), g.cell_size())) g.set(c.row, c.col, true);
  return Scene::create(std::move(id), std::move(g), std::move(objects), seed);
}

// A 6 m x 4 m room with a chair in the middle and a sofa by the east wall.
inline Scene simple_scene() {
  auto g = walled_room(80, 120, 0.05);
  return scene_with("simple", std::move(g),
                    {make_object("chair_0", "chair", {{3.0, 2.0}, {0.25, 0.25}, 0.0}, 0.0, 0.9),
                     make_object("sofa_0", "sofa", {{5.3, 2.0}, {0.3, 0.8}, 0.0}, 0.0, 0.8)});
}

// Smaller generated scenes keep test runtime low.
inline SceneParams small_params(std::uint64_t seed) {
  SceneParams p;
  p.width = 10.0;
  p.height = 10.0;
  p.room_count = 3;
  p.objects_min = 0;
  p.objects_max = 1;
  p.seed = seed;
  return p;
}

// `count` small generated scenes that each hold at least one object; seeds whose
// object placement fails are skipped.
inline std::vector<Scene> generated_scenes(std::size_t count, std::uint64_t first_seed = 1) {
  std::vector<Scene> out;
  for (std::uint64_t seed = first_seed; out.size() < count; ++seed) {
    auto p = small_params(seed);
    p.objects_min = 1;
    p.objects_max = 3;
    p.room_count = 2;
    try {
      out.push_back(generate_scene(p));
    } catch (const Error&) {
    }
  }
  return out;
}

// The simple room plus nine generated scenes.
inline std::vector<Scene> fixture_scenes() {
  std::vector<Scene> out{simple_scene()};
  for (auto& s : generated_scenes(9)) out.push_back(std::move(s));
  return out;
}

// Chair-finding episode in the simple room with the chair's full viewpoint set.
inline Episode chair_episode(const Scene& scene, const NavGrid& grid) {
  Episode ep;
  ep.episode_id = "simple_00000";
  ep.scene_id = scene.id();
  ep.start = {{1.0, 1.0}, 0.0};
  ep.goal_category = "chair";
  const auto& chair = scene.objects()[0];
  ep.viewpoints[chair.instance_id] = compute_viewpoints(scene, grid, chair, 1.0, VisibilityConfig{});
  return ep;
}

inline AgentState stopped_at(Vec2 p, double heading = 0.0) {
  AgentState s;
  s.position = p;
  s.heading = heading;
  s.stopped = true;
  return s;
}

// One forward step into the south wall at 30 degrees, from 5 cm outside contact.
// Returns the displacement with and without sliding.
inline std::pair<double, double> oblique_wall_displacements() {
  static const Scene room = scene_with("oblique", walled_room(40, 40, 0.05), {});
  const StartPose start{{1.0, 0.05 + 0.18 + 0.05}, -std::numbers::pi / 6};
  AgentConfig slide;
  slide.sliding_enabled = true;
  Simulator with_sliding(room, start, slide);
  Simulator without(room, start, AgentConfig{});
  with_sliding.step(Action::MoveForward);
  without.step(Action::MoveForward);
  return {distance(with_sliding.state().position, start.position),
          distance(without.state().position, start.position)};
}

}  // namespace objnav::testing

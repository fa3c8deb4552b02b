#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "objnav/goalzone.hpp"

namespace objnav {

enum class Difficulty { Easy, Medium, Hard };

std::string_view to_string(Difficulty d);
Difficulty parse_difficulty(std::string_view s);

struct StartPose {
  Vec2 position;
  double heading = 0.0;  // radians, counter-clockwise from +x

  friend bool operator==(const StartPose&, const StartPose&) = default;
};

struct EpisodeInfo {
  double euclidean = 0.0;
  double geodesic = 0.0;  // shortest-path length to the nearest viewpoint of any goal instance
  double ratio = 0.0;
  int shortest_action_count = 0;
  Difficulty difficulty = Difficulty::Easy;
  // Per goal instance, for diagnosis only.
  std::map<std::string, double> per_instance_geodesic;

  friend bool operator==(const EpisodeInfo&, const EpisodeInfo&) = default;
};

struct Episode {
  std::string episode_id;
  std::string scene_id;
  StartPose start;
  std::string goal_category;
  EpisodeInfo info;
  std::map<std::string, std::vector<Viewpoint>> viewpoints;  // by instance id

  /// Every viewpoint over all goal instances, in instance-id order.
  std::vector<Vec2> viewpoint_positions() const;

  friend bool operator==(const Episode&, const Episode&) = default;
};

/// Dataset construction rules for one benchmark flavor.
struct GenerationProfile {
  std::string name;
  double geodesic_min = 1.0;
  double geodesic_max = 30.0;
  int max_action_count = 750;
  double min_ratio = 1.05;
  double edge_easy = 0.0;  // easy below this geodesic distance
  double edge_hard = 0.0;  // hard at or above this one

  /// Geodesic range 1 m to 30 m.
  static GenerationProfile habitat();
  /// Geodesic range 0.71 m to 16.8 m.
  static GenerationProfile robothor();
  static GenerationProfile by_name(std::string_view name);
  /// Builds a profile whose difficulty edges split the range into equal thirds.
  static GenerationProfile with_range(std::string name, double min, double max);

  void validate() const;

  friend bool operator==(const GenerationProfile&, const GenerationProfile&) = default;
};

}  // namespace objnav

#include "objnav/episode.hpp"

namespace objnav {

std::string_view to_string(Difficulty d) {
  switch (d) {
    case Difficulty::Easy: return "easy";
    case Difficulty::Medium: return "medium";
    case Difficulty::Hard: return "hard";
  }
  return "easy";
}

Difficulty parse_difficulty(std::string_view s) {
  if (s == "easy") return Difficulty::Easy;
  if (s == "medium") return Difficulty::Medium;
  if (s == "hard") return Difficulty::Hard;
  throw ValidationError("difficulty", "unknown difficulty '" + std::string(s) + "'");
}

std::vector<Vec2> Episode::viewpoint_positions() const {
  std::vector<Vec2> out;
  for (const auto& [id, vps] : viewpoints)
    for (const auto& v : vps) out.push_back(v.position);
  return out;
}

GenerationProfile GenerationProfile::with_range(std::string name, double min, double max) {
  GenerationProfile p;
  p.name = std::move(name);
  p.geodesic_min = min;
  p.geodesic_max = max;
  p.edge_easy = round6(min + (max - min) / 3.0);
  p.edge_hard = round6(min + 2.0 * (max - min) / 3.0);
  return p;
}

GenerationProfile GenerationProfile::habitat() { return with_range("habitat", 1.0, 30.0); }

GenerationProfile GenerationProfile::robothor() { return with_range("robothor", 0.71, 16.8); }

GenerationProfile GenerationProfile::by_name(std::string_view name) {
  if (name == "habitat") return habitat();
  if (name == "robothor") return robothor();
  throw ArgumentError("unknown profile '" + std::string(name) + "' (expected habitat or robothor)");
}

void GenerationProfile::validate() const {
  if (!(geodesic_min >= 0 && geodesic_min < geodesic_max))
    throw ValidationError("geodesic_range", "profile '" + name + "' needs 0 <= min < max");
  if (!(edge_easy >= geodesic_min && edge_easy <= edge_hard && edge_hard <= geodesic_max))
    throw ValidationError("difficulty_edges", "profile '" + name + "' edges must lie inside the range");
  if (max_action_count <= 0) throw ValidationError("max_action_count", "must be positive");
  if (!(min_ratio >= 1.0)) throw ValidationError("min_ratio", "must be >= 1");
}

}  // namespace objnav

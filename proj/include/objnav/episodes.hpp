#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "objnav/episode.hpp"
#include "objnav/goalzone.hpp"
#include "objnav/nav.hpp"
#include "objnav/sim.hpp"

namespace objnav {

/// Heading of the k-th turn quantum (30 degrees by default), wrapped to (-pi, pi].
double quantized_heading(int k, double turn_deg = 30.0);
/// Index k with quantized_heading(k) within `tol` radians of `heading`, if any.
std::optional<int> heading_quantum(double heading, double turn_deg = 30.0, double tol = 1e-5);

/// Easy below the first edge, medium below the second, hard otherwise.
/// Throws ArgumentError outside the profile's geodesic range.
Difficulty difficulty_bin(double geodesic, const GenerationProfile& profile);

/// Success-zone data for every object of one scene: viewpoints per instance and cached
/// geodesic fields toward them.
class GoalIndex {
 public:
  GoalIndex(const Scene& scene, std::shared_ptr<const NavGrid> grid, double r_success, const VisibilityConfig& vis);

  const Scene& scene() const { return *scene_; }
  const NavGrid& grid() const { return *grid_; }
  double r_success() const { return r_success_; }

  const std::vector<Viewpoint>& viewpoints(const std::string& instance_id) const;
  /// Instances of `category` with at least one viewpoint, in scene order.
  std::vector<std::string> valid_instances(const std::string& category) const;
  /// Categories with at least one valid instance, in scene order.
  std::vector<std::string> valid_categories() const;

  /// Field toward the union of viewpoints of every valid instance of `category`.
  const GeodesicField& category_field(const std::string& category);
  const GeodesicField& instance_field(const std::string& instance_id);

 private:
  const Scene* scene_;
  std::shared_ptr<const NavGrid> grid_;
  double r_success_;
  std::map<std::string, std::vector<Viewpoint>> viewpoints_;
  std::map<std::string, GeodesicField> category_fields_;
  std::map<std::string, GeodesicField> instance_fields_;
};

/// Field toward an explicit viewpoint set (e.g. the one stored in an episode).
GeodesicField viewpoint_field(const NavGrid& grid, std::span<const Vec2> viewpoints);

struct EpisodeGenConfig {
  int count_per_scene = 100;
  GenerationProfile profile = GenerationProfile::habitat();
  double r_success = 1.0;
  std::uint64_t seed = 0;
  VisibilityConfig visibility;
  AgentConfig agent;
  std::int64_t draw_budget = 1'000'000;
  double min_acceptance_rate = 0.001;
  // Draws before the acceptance-rate check can trip.
  std::int64_t min_draws_for_rate_check = 10'000;
  int jobs = 1;
};

/// Rejection sampling gave up; carries the per-filter rejection tallies.
class GenerationError : public Error {
 public:
  GenerationError(const std::string& scene_id, std::int64_t draws, std::int64_t accepted,
                  std::map<std::string, std::int64_t> rejections);

  const std::map<std::string, std::int64_t>& rejections() const { return rejections_; }
  const std::string& dominant_filter() const { return dominant_; }

 private:
  std::map<std::string, std::int64_t> rejections_;
  std::string dominant_;
};

/// Deterministic in (scenes, config) regardless of config.jobs.
std::vector<Episode> generate_episodes(std::span<const Scene> scenes, const EpisodeGenConfig& config);

/// Checks one episode against the profile; throws ValidationError naming the episode and filter.
void validate_episode(const Episode& episode, const GenerationProfile& profile);

// ---------------------------------------------------------------------------
// Dataset files: JSON lines, a header line followed by one episode per line.

struct DatasetHeader {
  GenerationProfile profile;
  double r_success = 1.0;
  std::uint64_t seed = 0;

  friend bool operator==(const DatasetHeader&, const DatasetHeader&) = default;
};

struct Dataset {
  DatasetHeader header;
  std::vector<Episode> episodes;
};

std::string episode_to_json(const Episode& episode);
Episode episode_from_json(std::string_view line);

void write_dataset(std::ostream& out, const DatasetHeader& header, std::span<const Episode> episodes);

/// Streams episodes one line at a time; memory use does not grow with the file.
class DatasetReader {
 public:
  explicit DatasetReader(std::istream& in);

  const DatasetHeader& header() const { return header_; }
  /// Next validated episode, or nullopt at end of input.
  std::optional<Episode> next();
  std::size_t line_number() const { return line_; }

 private:
  std::istream* in_;
  DatasetHeader header_;
  std::size_t line_ = 0;
  std::size_t offset_ = 0;
};

Dataset read_dataset(std::istream& in);

// ---------------------------------------------------------------------------
// Distribution statistics

struct HistogramBin {
  double lo = 0.0;
  double hi = 0.0;
  std::int64_t count = 0;
};

struct MetricSummary {
  std::string metric;
  double min = 0.0;
  double max = 0.0;
  double mean = 0.0;
  double median = 0.0;
  std::vector<HistogramBin> bins;
};

struct StatsReport {
  std::size_t episode_count = 0;
  std::vector<MetricSummary> metrics;  // euclidean, geodesic, ratio
  std::map<std::string, std::int64_t> per_category;
  std::map<std::string, std::int64_t> per_difficulty;

  const MetricSummary& metric(std::string_view name) const;
};

inline constexpr int kHistogramBins = 30;

StatsReport dataset_stats(std::span<const Episode> episodes);
void write_stats_csv(std::ostream& out, const StatsReport& report);

}  // namespace objnav

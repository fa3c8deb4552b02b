#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "objnav/episode.hpp"
#include "objnav/goalzone.hpp"
#include "objnav/nav.hpp"
#include "objnav/sim.hpp"

namespace objnav {

enum class SuccessMode { Habitat2020, General };
enum class VisibilityMode { Oracle, InView };
enum class Termination { Stop, Budget, Error };

std::string_view to_string(SuccessMode m);
std::string_view to_string(VisibilityMode m);
std::string_view to_string(Termination t);
SuccessMode parse_success_mode(std::string_view s);
VisibilityMode parse_visibility_mode(std::string_view s);
Termination parse_termination(std::string_view s);

struct EvalConfig {
  SuccessMode success_mode = SuccessMode::Habitat2020;
  double r_success = 1.0;
  double viewpoint_geodesic_tolerance = 0.1;
  VisibilityMode visibility_mode = VisibilityMode::Oracle;
  int max_steps = 500;
  VisibilityConfig visibility;
  AgentConfig agent;
  SensorConfig sensor;

  void validate() const;
};

struct SuccessReasons {
  bool intentionality = false;
  bool validity = false;
  // habitat2020 mode
  bool within_tolerance = false;
  // general mode
  bool proximity = false;
  bool visibility = false;
  double geodesic_to_zone = kInfinity;
};

struct SuccessResult {
  int success = 0;
  SuccessReasons reasons;
};

/// Success of a finished episode under cfg.success_mode. Builds the navgrid and the
/// field toward the episode's viewpoints.
SuccessResult evaluate_success(const Scene& scene, const Episode& episode, const AgentState& final_state,
                               const EvalConfig& cfg);
/// Same, reusing a navgrid and the zone field of this episode.
SuccessResult evaluate_success(const Scene& scene, const NavGrid& grid, const GeodesicField& zone,
                               const Episode& episode, const AgentState& final_state, const EvalConfig& cfg);

/// S * l / max(p, l). Throws ArgumentError when l <= 0 or p < 0.
double spl(int success, double shortest, double actual);

struct EpisodeResult {
  std::string episode_id;
  int success = 0;
  double l = 0.0;
  double p = 0.0;
  double spl = 0.0;
  int steps = 0;
  double final_geodesic_to_zone = kInfinity;
  Termination termination = Termination::Stop;

  friend bool operator==(const EpisodeResult&, const EpisodeResult&) = default;
};

struct MetricsReport {
  std::size_t n = 0;
  double spl = 0.0;
  double success_rate = 0.0;
  // Mean over episodes whose final position reaches the zone at all; NaN when none do.
  double mean_final_geodesic = 0.0;
  std::vector<EpisodeResult> episodes;  // sorted by episode id
};

bool operator==(const MetricsReport& a, const MetricsReport& b);

/// Deterministic fold in episode-id order. Throws ArgumentError on empty input.
MetricsReport aggregate(std::vector<EpisodeResult> results);

void write_report_json(std::ostream& out, const MetricsReport& report);
MetricsReport read_report_json(std::istream& in);
void write_report_csv(std::ostream& out, const MetricsReport& report);

/// Refuses (ArgumentError) to pool datasets built under different profiles unless
/// `force` is set, in which case a warning goes to `warn`.
void check_profiles_comparable(std::span<const GenerationProfile> profiles, bool force, std::ostream* warn);

struct VarianceDiagnostic {
  double empirical_var = 0.0;     // variance of SPL_i over all simulated episodes
  double bernoulli_var = 0.0;     // c^2 p (1 - p)
  double mean_scaled_var = 0.0;  // p (1 - p) mean(SPL)^2
  double empirical_mean = 0.0;
};

/// Simulates trials x n episodes with SPL_i = S_i * c, S_i ~ Bernoulli(prob).
VarianceDiagnostic variance_diagnostic(double c, double prob, int n, std::int64_t trials, std::uint64_t seed);

struct TurningCheck {
  double p_base = 0.0;
  double p_turned = 0.0;
  double spl_base = 0.0;
  double spl_turned = 0.0;
  int success_base = 0;
  int success_turned = 0;
};

/// Actions with `turn_pairs` LEFT/RIGHT pairs spread evenly before the final STOP, optionally
/// preceded by a full left panorama.
std::vector<Action> with_turns(std::span<const Action> base, int turn_pairs, bool panorama_prefix,
                               int turns_per_rev = 12);

/// Runs `base` and its turn-augmented variant on fresh simulators and scores both.
TurningCheck turning_invariance_check(const std::function<Simulator()>& make_sim, std::span<const Action> base,
                                      int turn_pairs, bool panorama_prefix,
                                      const std::function<int(const Simulator&)>& success, double shortest);

}  // namespace objnav

#include "objnav/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <tuple>

#include "nlohmann/json.hpp"
#include "objnav/episodes.hpp"
#include "objnav/random.hpp"

namespace objnav {

std::string_view to_string(SuccessMode m) { return m == SuccessMode::Habitat2020 ? "habitat2020" : "general"; }

std::string_view to_string(VisibilityMode m) { return m == VisibilityMode::Oracle ? "oracle" : "in_view"; }

std::string_view to_string(Termination t) {
  switch (t) {
    case Termination::Stop: return "stop";
    case Termination::Budget: return "budget";
    case Termination::Error: return "error";
  }
  return "error";
}

SuccessMode parse_success_mode(std::string_view s) {
  if (s == "habitat2020") return SuccessMode::Habitat2020;
  if (s == "general") return SuccessMode::General;
  throw ArgumentError("unknown success mode '" + std::string(s) + "' (expected habitat2020 or general)");
}

VisibilityMode parse_visibility_mode(std::string_view s) {
  if (s == "oracle") return VisibilityMode::Oracle;
  if (s == "in_view" || s == "in-view") return VisibilityMode::InView;
  throw ArgumentError("unknown visibility mode '" + std::string(s) + "' (expected oracle or in_view)");
}

Termination parse_termination(std::string_view s) {
  if (s == "stop") return Termination::Stop;
  if (s == "budget") return Termination::Budget;
  if (s == "error") return Termination::Error;
  throw ValidationError("termination", "unknown termination '" + std::string(s) + "'");
}

void EvalConfig::validate() const {
  if (!(r_success > 0)) throw ArgumentError("r_success must be positive");
  if (!(viewpoint_geodesic_tolerance > 0)) throw ArgumentError("viewpoint geodesic tolerance must be positive");
  if (max_steps <= 0) throw ArgumentError("max_steps must be positive");
  visibility.validate();
  agent.validate();
}

// ---------------------------------------------------------------------------

SuccessResult evaluate_success(const Scene& scene, const Episode& episode, const AgentState& final_state,
                               const EvalConfig& cfg) {
  const NavGrid grid = build_navgrid(scene, cfg.agent.radius);
  const auto points = episode.viewpoint_positions();
  const GeodesicField zone = viewpoint_field(grid, points);
  return evaluate_success(scene, grid, zone, episode, final_state, cfg);
}

SuccessResult evaluate_success(const Scene& scene, const NavGrid& grid, const GeodesicField& zone,
                               const Episode& episode, const AgentState& final_state, const EvalConfig& cfg) {
  SuccessResult r;
  auto& why = r.reasons;
  const Vec2 pos = final_state.position;
  why.intentionality = final_state.stopped;
  why.validity = grid.navigable(pos);
  why.geodesic_to_zone = why.validity ? zone.at(grid, pos) : kInfinity;

  bool mode_ok = false;
  if (cfg.success_mode == SuccessMode::Habitat2020) {
    why.within_tolerance = why.geodesic_to_zone <= cfg.viewpoint_geodesic_tolerance;
    mode_ok = why.within_tolerance;
  } else {
    const ViewPose pose{pos, final_state.heading, final_state.pitch};
    for (const ObjectInstance* obj : scene.objects_of(episode.goal_category)) {
      const bool near = distance_to_obb(pos, obj->obb) <= cfg.r_success;
      if (!near) continue;
      why.proximity = true;
      const bool seen = cfg.visibility_mode == VisibilityMode::Oracle ? oracle_visible(scene, pos, *obj, cfg.visibility)
                                                                      : in_view(scene, pose, *obj, cfg.visibility);
      if (seen) {
        why.visibility = true;
        break;
      }
    }
    mode_ok = why.proximity && why.visibility;
  }
  r.success = why.intentionality && why.validity && mode_ok ? 1 : 0;
  return r;
}

double spl(int success, double shortest, double actual) {
  if (!(shortest > 0)) throw ArgumentError("SPL needs a positive shortest-path length, got " + std::to_string(shortest));
  if (!(actual >= 0)) throw ArgumentError("SPL needs a non-negative path length, got " + std::to_string(actual));
  if (success != 0 && success != 1) throw ArgumentError("success must be 0 or 1");
  return success * shortest / std::max(actual, shortest);
}

bool operator==(const MetricsReport& a, const MetricsReport& b) {
  auto same = [](double x, double y) { return x == y || (std::isnan(x) && std::isnan(y)); };
  return a.n == b.n && a.spl == b.spl && a.success_rate == b.success_rate &&
         same(a.mean_final_geodesic, b.mean_final_geodesic) && a.episodes == b.episodes;
}

MetricsReport aggregate(std::vector<EpisodeResult> results) {
  if (results.empty()) throw ArgumentError("cannot aggregate zero episodes");
  std::sort(results.begin(), results.end(),
            [](const EpisodeResult& a, const EpisodeResult& b) { return a.episode_id < b.episode_id; });
  MetricsReport r;
  r.n = results.size();
  double spl_sum = 0.0;
  double success_sum = 0.0;
  double geo_sum = 0.0;
  std::size_t geo_n = 0;
  for (const auto& e : results) {
    spl_sum += e.spl;
    success_sum += e.success;
    if (std::isfinite(e.final_geodesic_to_zone)) {
      geo_sum += e.final_geodesic_to_zone;
      ++geo_n;
    }
  }
  const auto n = static_cast<double>(r.n);
  r.spl = spl_sum / n;
  r.success_rate = success_sum / n;
  r.mean_final_geodesic = geo_n ? geo_sum / static_cast<double>(geo_n) : std::nan("");
  r.episodes = std::move(results);
  return r;
}

// ---------------------------------------------------------------------------
// Report files

namespace {

using ojson = nlohmann::ordered_json;

ojson number_or_null(double v) { return std::isfinite(v) ? ojson(round6(v)) : ojson(nullptr); }

double number_or_inf(const nlohmann::json& j) { return j.is_null() ? kInfinity : j.get<double>(); }

std::string csv_number(double v) {
  if (!std::isfinite(v)) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

void write_report_json(std::ostream& out, const MetricsReport& report) {
  ojson j;
  j["schema_version"] = "1";
  j["N"] = report.n;
  j["spl"] = round6(report.spl);
  j["success_rate"] = round6(report.success_rate);
  j["mean_final_geodesic"] = number_or_null(report.mean_final_geodesic);
  j["episodes"] = ojson::array();
  for (const auto& e : report.episodes) {
    ojson row;
    row["episode_id"] = e.episode_id;
    row["success"] = e.success;
    row["l"] = round6(e.l);
    row["p"] = round6(e.p);
    row["spl"] = round6(e.spl);
    row["steps"] = e.steps;
    row["final_geodesic_to_zone"] = number_or_null(e.final_geodesic_to_zone);
    row["termination"] = to_string(e.termination);
    j["episodes"].push_back(std::move(row));
  }
  out << j.dump(2) << '\n';
}

MetricsReport read_report_json(std::istream& in) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("metrics report: ") + e.what(), e.byte);
  }
  try {
    MetricsReport r;
    r.n = j.at("N").get<std::size_t>();
    r.spl = j.at("spl").get<double>();
    r.success_rate = j.at("success_rate").get<double>();
    r.mean_final_geodesic = j.at("mean_final_geodesic").is_null() ? std::nan("") : j.at("mean_final_geodesic").get<double>();
    for (const auto& row : j.at("episodes")) {
      EpisodeResult e;
      e.episode_id = row.at("episode_id").get<std::string>();
      e.success = row.at("success").get<int>();
      e.l = row.at("l").get<double>();
      e.p = row.at("p").get<double>();
      e.spl = row.at("spl").get<double>();
      e.steps = row.at("steps").get<int>();
      e.final_geodesic_to_zone = number_or_inf(row.at("final_geodesic_to_zone"));
      e.termination = parse_termination(row.at("termination").get<std::string>());
      r.episodes.push_back(std::move(e));
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("schema", std::string("metrics report: ") + e.what());
  }
}

void write_report_csv(std::ostream& out, const MetricsReport& report) {
  out << "episode_id,success,l,p,spl,steps,final_geodesic_to_zone,termination\n";
  for (const auto& e : report.episodes)
    out << e.episode_id << ',' << e.success << ',' << csv_number(e.l) << ',' << csv_number(e.p) << ','
        << csv_number(e.spl) << ',' << e.steps << ',' << csv_number(e.final_geodesic_to_zone) << ','
        << to_string(e.termination) << '\n';
}

void check_profiles_comparable(std::span<const GenerationProfile> profiles, bool force, std::ostream* warn) {
  for (const auto& p : profiles) {
    if (p == profiles.front()) continue;
    const std::string msg = "datasets built under different profiles ('" + profiles.front().name + "' and '" +
                            p.name + "') are not comparable";
    if (!force) throw ArgumentError(msg + "; pass --force to pool them anyway");
    if (warn) *warn << "warning: " << msg << '\n';
    return;
  }
}

// ---------------------------------------------------------------------------
// Diagnostics

VarianceDiagnostic variance_diagnostic(double c, double prob, int n, std::int64_t trials, std::uint64_t seed) {
  if (!(c > 0 && c <= 1)) throw ArgumentError("c must lie in (0, 1]");
  if (!(prob >= 0 && prob <= 1)) throw ArgumentError("prob must lie in [0, 1]");
  if (n <= 0) throw ArgumentError("N must be positive");
  if (trials < 10'000) throw ArgumentError("variance diagnostic needs at least 10^4 trials");

  Rng rng(seed);
  // Welford over every simulated SPL_i.
  double mean = 0.0;
  double m2 = 0.0;
  std::int64_t count = 0;
  for (std::int64_t t = 0; t < trials; ++t) {
    for (int i = 0; i < n; ++i) {
      const double x = bernoulli(rng, prob) ? c : 0.0;
      ++count;
      const double delta = x - mean;
      mean += delta / static_cast<double>(count);
      m2 += delta * (x - mean);
    }
  }
  VarianceDiagnostic d;
  d.empirical_mean = mean;
  d.empirical_var = m2 / static_cast<double>(count);
  d.bernoulli_var = c * c * prob * (1 - prob);
  d.mean_scaled_var = prob * (1 - prob) * mean * mean;
  return d;
}

std::vector<Action> with_turns(std::span<const Action> base, int turn_pairs, bool panorama_prefix,
                               int turns_per_rev) {
  if (base.empty() || base.back() != Action::Stop) throw ArgumentError("base actions must end in STOP");
  if (turn_pairs < 0) throw ArgumentError("turn_pairs must be >= 0");
  std::vector<Action> out;
  if (panorama_prefix) out.insert(out.end(), static_cast<std::size_t>(turns_per_rev), Action::TurnLeft);
  const std::size_t slots = base.size();  // before each action, including STOP
  int placed = 0;
  for (std::size_t i = 0; i < base.size(); ++i) {
    const int due = static_cast<int>((static_cast<std::size_t>(turn_pairs) * (i + 1)) / slots);
    for (; placed < due; ++placed) {
      out.push_back(Action::TurnLeft);
      out.push_back(Action::TurnRight);
    }
    out.push_back(base[i]);
  }
  return out;
}

namespace {

std::pair<double, int> run_actions(const std::function<Simulator()>& make_sim, std::span<const Action> actions,
                                   const std::function<int(const Simulator&)>& success) {
  Simulator sim = make_sim();
  for (Action a : actions) {
    if (sim.done()) break;
    sim.step(a);
  }
  return {sim.path_length(), success(sim)};
}

}  // namespace

TurningCheck turning_invariance_check(const std::function<Simulator()>& make_sim, std::span<const Action> base,
                                      int turn_pairs, bool panorama_prefix,
                                      const std::function<int(const Simulator&)>& success, double shortest) {
  const int turns_per_rev = static_cast<int>(std::lround(360.0 / make_sim().agent_config().turn_deg));
  const auto turned = with_turns(base, turn_pairs, panorama_prefix, turns_per_rev);
  TurningCheck c;
  std::tie(c.p_base, c.success_base) = run_actions(make_sim, base, success);
  std::tie(c.p_turned, c.success_turned) = run_actions(make_sim, turned, success);
  c.spl_base = spl(c.success_base, shortest, c.p_base);
  c.spl_turned = spl(c.success_turned, shortest, c.p_turned);
  return c;
}

}  // namespace objnav

#include <gtest/gtest.h>

#include <algorithm>
#include <sstream>

#include "objnav/metrics.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace objnav;
using namespace objnav::testing;

namespace {

std::vector<EpisodeResult> random_results(Rng& rng, int n) {
  std::vector<EpisodeResult> out;
  for (int i = 0; i < n; ++i) {
    EpisodeResult r;
    r.episode_id = "ep_" + std::to_string(1000 + i);
    r.success = bernoulli(rng, 0.6) ? 1 : 0;
    r.l = round6(uniform(rng, 0.5, 20.0));
    r.p = round6(uniform(rng, 0.0, 40.0));
    r.spl = spl(r.success, r.l, r.p);
    r.steps = uniform_int(rng, 1, 500);
    r.final_geodesic_to_zone = bernoulli(rng, 0.1) ? kInfinity : round6(uniform(rng, 0.0, 10.0));
    r.termination = r.success ? Termination::Stop : Termination::Budget;
    out.push_back(r);
  }
  return out;
}

}  // namespace

TEST(Spl, WorkedExamples) {
  EXPECT_EQ(spl(1, 10, 10), 1.0);
  EXPECT_EQ(spl(1, 10, 20), 0.5);
  EXPECT_EQ(spl(0, 10, 10), 0.0);
  EXPECT_EQ(spl(0, 10, 3), 0.0);
  // A path shorter than the reference (start snapped off-grid) caps at 1.
  EXPECT_EQ(spl(1, 10, 9), 1.0);
  EXPECT_THROW(spl(1, 0, 5), ArgumentError);
  EXPECT_THROW(spl(1, 5, -1), ArgumentError);
  EXPECT_THROW(spl(2, 5, 5), ArgumentError);
}

TEST(Spl, AggregateEqualsNaiveMean) {
  Rng rng(2024);
  const auto results = random_results(rng, 1000);
  const auto report = aggregate(results);
  EXPECT_EQ(report.n, 1000u);
  EXPECT_NEAR(report.spl, naive_mean_spl(results), 1e-12);
  double s = 0;
  double g = 0;
  int gn = 0;
  for (const auto& r : results) {
    s += r.success;
    if (std::isfinite(r.final_geodesic_to_zone)) {
      g += r.final_geodesic_to_zone;
      ++gn;
    }
  }
  EXPECT_NEAR(report.success_rate, s / 1000, 1e-12);
  EXPECT_NEAR(report.mean_final_geodesic, g / gn, 1e-12);
}

TEST(Spl, AggregateIgnoresInputOrder) {
  Rng rng(7);
  auto results = random_results(rng, 200);
  const auto a = aggregate(results);
  std::reverse(results.begin(), results.end());
  std::swap(results[3], results[150]);
  const auto b = aggregate(results);
  EXPECT_EQ(a, b);
  EXPECT_TRUE(std::is_sorted(a.episodes.begin(), a.episodes.end(),
                             [](const auto& x, const auto& y) { return x.episode_id < y.episode_id; }));
  EXPECT_THROW(aggregate({}), ArgumentError);
}

TEST(Variance, MatchesBernoulliVariance) {
  const auto d = variance_diagnostic(0.8, 0.5, 100, 10'000, 1);
  EXPECT_NEAR(d.bernoulli_var, 0.16, 1e-15);
  EXPECT_LE(std::abs(d.empirical_var - 0.16), 0.03 * 0.16);
  EXPECT_NEAR(d.empirical_mean, 0.4, 0.01);
  EXPECT_LT(variance_diagnostic(0.8, 1.0, 100, 10'000, 1).empirical_var, 1e-12);
  EXPECT_EQ(variance_diagnostic(0.8, 0.0, 100, 10'000, 1).empirical_var, 0.0);
  EXPECT_THROW(variance_diagnostic(0.0, 0.5, 100, 10'000, 1), ArgumentError);
  EXPECT_THROW(variance_diagnostic(0.8, 1.5, 100, 10'000, 1), ArgumentError);
  EXPECT_THROW(variance_diagnostic(0.8, 0.5, 100, 999, 1), ArgumentError);
}

TEST(Turning, InsertionLayout) {
  const std::vector<Action> base = {Action::MoveForward, Action::MoveForward, Action::Stop};
  const auto turned = with_turns(base, 50, true);
  EXPECT_EQ(turned.size(), base.size() + 100 + 12);
  EXPECT_EQ(turned.back(), Action::Stop);
  EXPECT_EQ(std::count(turned.begin(), turned.end(), Action::TurnLeft), 62);
  EXPECT_EQ(std::count(turned.begin(), turned.end(), Action::TurnRight), 50);
  std::vector<Action> stripped;
  std::copy_if(turned.begin(), turned.end(), std::back_inserter(stripped),
               [](Action a) { return a != Action::TurnLeft && a != Action::TurnRight; });
  EXPECT_EQ(stripped, base);
  const std::vector<Action> no_stop = {Action::MoveForward};
  EXPECT_THROW(with_turns(no_stop, 1, false), ArgumentError);
}

TEST(Turning, TurnsInPlaceChangeNeitherPathNorSpl) {
  const Scene scene = simple_scene();
  const NavGrid grid = build_navgrid(scene);
  const Episode ep = chair_episode(scene, grid);
  const GeodesicField zone = viewpoint_field(grid, ep.viewpoint_positions());
  EvalConfig cfg;
  std::vector<Action> base(6, Action::MoveForward);
  base.push_back(Action::Stop);
  const auto check = turning_invariance_check(
      [&] { return Simulator(scene, ep.start); }, base, 50, true,
      [&](const Simulator& s) { return evaluate_success(scene, grid, zone, ep, s.state(), cfg).success; }, 1.5);
  EXPECT_EQ(check.success_base, 1);
  EXPECT_EQ(check.p_base, check.p_turned);
  EXPECT_EQ(check.spl_base, check.spl_turned);
  EXPECT_EQ(check.success_base, check.success_turned);
  EXPECT_EQ(check.p_base, 1.5);
}

TEST(Success, Habitat2020AcceptsEveryViewpointAfterStop) {
  const Scene scene = simple_scene();
  const NavGrid grid = build_navgrid(scene);
  const Episode ep = chair_episode(scene, grid);
  const GeodesicField zone = viewpoint_field(grid, ep.viewpoint_positions());
  const EvalConfig cfg;
  ASSERT_FALSE(ep.viewpoint_positions().empty());
  for (const Vec2& v : ep.viewpoint_positions()) {
    const auto r = evaluate_success(scene, grid, zone, ep, stopped_at(v), cfg);
    EXPECT_EQ(r.success, 1) << v.x << "," << v.y;
    EXPECT_EQ(r.reasons.geodesic_to_zone, 0.0);
  }
  // Far from the chair: fails on tolerance only.
  const auto far = evaluate_success(scene, grid, zone, ep, stopped_at({0.5, 3.5}), cfg);
  EXPECT_EQ(far.success, 0);
  EXPECT_TRUE(far.reasons.intentionality);
  EXPECT_TRUE(far.reasons.validity);
  EXPECT_FALSE(far.reasons.within_tolerance);
}

TEST(Success, NoStopMeansFailure) {
  const Scene scene = simple_scene();
  const NavGrid grid = build_navgrid(scene);
  const Episode ep = chair_episode(scene, grid);
  AgentState s = stopped_at(ep.viewpoint_positions().front());
  s.stopped = false;
  s.step_count = 500;
  for (auto mode : {SuccessMode::Habitat2020, SuccessMode::General}) {
    EvalConfig cfg;
    cfg.success_mode = mode;
    const auto r = evaluate_success(scene, ep, s, cfg);
    EXPECT_EQ(r.success, 0);
    EXPECT_FALSE(r.reasons.intentionality);
  }
  // The budget path through a simulator: only turns, never STOP.
  Simulator sim(scene, {ep.viewpoint_positions().front(), 0.0}, {}, {}, 20);
  while (!sim.done()) sim.step(Action::TurnLeft);
  EXPECT_EQ(evaluate_success(scene, ep, sim.state(), EvalConfig{}).success, 0);
}

TEST(Success, StoppingInsideAnObstacleIsInvalid) {
  const Scene scene = simple_scene();
  const NavGrid grid = build_navgrid(scene);
  const Episode ep = chair_episode(scene, grid);
  EvalConfig cfg;
  cfg.success_mode = SuccessMode::General;
  const auto r = evaluate_success(scene, ep, stopped_at({3.0, 2.0}), cfg);
  EXPECT_FALSE(r.reasons.validity);
  EXPECT_EQ(r.success, 0);
}

TEST(Success, GeneralModeIsMonotoneInSuccessRadius) {
  const Scene scene = simple_scene();
  const NavGrid grid = build_navgrid(scene);
  const Episode ep = chair_episode(scene, grid);
  const GeodesicField zone = viewpoint_field(grid, ep.viewpoint_positions());
  Rng rng(12);
  const double radii[] = {0.2, 0.4, 0.6, 0.8, 1.0, 1.5, 2.0, 3.0};
  int flips = 0;
  for (int i = 0; i < 300; ++i) {
    const Vec2 p{uniform(rng, 0.2, 5.8), uniform(rng, 0.2, 3.8)};
    if (!grid.navigable(p)) continue;
    const double heading = uniform(rng, -std::numbers::pi, std::numbers::pi);
    for (auto vis : {VisibilityMode::Oracle, VisibilityMode::InView}) {
      int prev = 0;
      for (double r : radii) {
        EvalConfig cfg;
        cfg.success_mode = SuccessMode::General;
        cfg.visibility_mode = vis;
        cfg.r_success = r;
        const int s = evaluate_success(scene, grid, zone, ep, stopped_at(p, heading), cfg).success;
        EXPECT_GE(s, prev) << p.x << "," << p.y << " r=" << r;
        flips += s != prev;
        prev = s;
      }
    }
  }
  EXPECT_GT(flips, 0);
}

TEST(Success, InViewNeedsTheCameraOnTheObject) {
  const Scene scene = simple_scene();
  const NavGrid grid = build_navgrid(scene);
  const Episode ep = chair_episode(scene, grid);
  EvalConfig cfg;
  cfg.success_mode = SuccessMode::General;
  cfg.visibility_mode = VisibilityMode::InView;
  const Vec2 p{2.2, 2.0};  // west of the chair
  EXPECT_EQ(evaluate_success(scene, ep, stopped_at(p, 0.0), cfg).success, 1);
  EXPECT_EQ(evaluate_success(scene, ep, stopped_at(p, std::numbers::pi), cfg).success, 0);
  cfg.visibility_mode = VisibilityMode::Oracle;
  EXPECT_EQ(evaluate_success(scene, ep, stopped_at(p, std::numbers::pi), cfg).success, 1);
}

TEST(Report, JsonRoundTripAndCsv) {
  Rng rng(3);
  auto results = random_results(rng, 25);
  for (auto& r : results) r.spl = round6(r.spl);
  const auto report = aggregate(results);
  std::stringstream json;
  write_report_json(json, report);
  EXPECT_NE(json.str().find("null"), std::string::npos);
  const auto back = read_report_json(json);
  EXPECT_EQ(back.episodes, report.episodes);
  EXPECT_EQ(back.n, report.n);
  EXPECT_NEAR(back.spl, report.spl, 5e-7);
  EXPECT_NEAR(back.success_rate, report.success_rate, 5e-7);
  EXPECT_NEAR(back.mean_final_geodesic, report.mean_final_geodesic, 5e-7);
  std::ostringstream csv;
  write_report_csv(csv, report);
  const std::string text = csv.str();
  EXPECT_EQ(text.rfind("episode_id,success,l,p,spl,steps,final_geodesic_to_zone,termination\n", 0), 0u);
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 26);
}

TEST(Report, AllUnreachableGivesNullMeanGeodesic) {
  EpisodeResult r;
  r.episode_id = "a";
  r.l = 1;
  r.final_geodesic_to_zone = kInfinity;
  const auto report = aggregate({r});
  EXPECT_TRUE(std::isnan(report.mean_final_geodesic));
  std::stringstream json;
  write_report_json(json, report);
  EXPECT_EQ(read_report_json(json), report);
}

TEST(Profiles, PoolingNeedsForce) {
  const GenerationProfile ps[] = {GenerationProfile::habitat(), GenerationProfile::robothor()};
  EXPECT_THROW(check_profiles_comparable(ps, false, nullptr), ArgumentError);
  std::ostringstream warn;
  EXPECT_NO_THROW(check_profiles_comparable(ps, true, &warn));
  EXPECT_NE(warn.str().find("warning"), std::string::npos);
  const GenerationProfile same[] = {GenerationProfile::habitat(), GenerationProfile::habitat()};
  EXPECT_NO_THROW(check_profiles_comparable(same, false, nullptr));
}

TEST(Config, EnumsAndValidation) {
  EXPECT_EQ(parse_success_mode(to_string(SuccessMode::Habitat2020)), SuccessMode::Habitat2020);
  EXPECT_EQ(parse_success_mode("general"), SuccessMode::General);
  EXPECT_EQ(parse_visibility_mode("in_view"), VisibilityMode::InView);
  EXPECT_EQ(parse_termination(to_string(Termination::Budget)), Termination::Budget);
  EvalConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  EXPECT_EQ(cfg.r_success, 1.0);
  EXPECT_EQ(cfg.viewpoint_geodesic_tolerance, 0.1);
  EXPECT_EQ(cfg.max_steps, 500);
  cfg.r_success = 0;
  EXPECT_THROW(cfg.validate(), ArgumentError);
}

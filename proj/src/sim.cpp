#include "objnav/sim.hpp"

#include <limits>
#include <ostream>

#include "nlohmann/json.hpp"

namespace objnav {

std::string_view action_name(Action a) {
  switch (a) {
    case Action::MoveForward: return "move-forward";
    case Action::TurnLeft: return "turn-left";
    case Action::TurnRight: return "turn-right";
    case Action::LookUp: return "look-up";
    case Action::LookDown: return "look-down";
    case Action::Stop: return "stop";
  }
  return "stop";
}

std::optional<Action> parse_action(std::string_view name) {
  for (Action a : kAllActions)
    if (action_name(a) == name) return a;
  return std::nullopt;
}

void AgentConfig::validate() const {
  if (!(radius > 0)) throw ArgumentError("agent radius must be positive");
  if (!(step > 0)) throw ArgumentError("forward step must be positive");
  if (!(turn_deg > 0)) throw ArgumentError("turn angle must be positive");
  const double turns = 360.0 / turn_deg;
  if (std::abs(turns - std::round(turns)) > 1e-9) throw ArgumentError("turn angle must divide 360 degrees");
  if (!(pitch_min_deg <= 0 && pitch_max_deg >= 0)) throw ArgumentError("pitch limits must bracket 0");
  if (!(tilt_deg > 0 && tilt_deg <= pitch_max_deg - pitch_min_deg))
    throw ArgumentError("tilt must be positive and within the pitch range");
}

Observation apply_grant(Observation obs, const SensorGrant& grant) {
  if (!grant.gps_compass) {
    obs.gps.reset();
    obs.compass.reset();
  }
  if (!grant.depth) obs.depth.reset();
  return obs;
}

void write_trajectory_jsonl(std::ostream& out, const std::vector<TrajectoryRecord>& records) {
  for (const auto& r : records) {
    nlohmann::ordered_json j;
    j["step"] = r.step;
    j["action"] = action_name(r.action);
    j["x"] = round6(r.position.x);
    j["y"] = round6(r.position.y);
    j["heading"] = round6(r.heading);
    j["pitch"] = round6(r.pitch);
    j["collided"] = r.collided;
    out << j.dump() << '\n';
  }
}

std::vector<double> depth_scan(const Scene& scene, Vec2 position, double heading, const SensorConfig& sensor) {
  const int n = sensor.ray_count();
  const double hfov = deg_to_rad(sensor.hfov_deg);
  std::vector<double> out(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    const double angle = heading + hfov / 2 - (k + 0.5) * hfov / n;
    const RayHit hit = raycast(scene, position, unit_from_angle(angle), sensor.depth_max);
    double range = hit.hit ? std::min(hit.range, sensor.depth_max) : sensor.depth_max;
    if (range < sensor.depth_min) range = 0.0;
    out[static_cast<std::size_t>(k)] = range;
  }
  return out;
}

StartPose world_pose(const StartPose& spawn, Vec2 gps, double compass) {
  return {spawn.position + rotate(gps, spawn.heading), wrap_angle(spawn.heading + compass)};
}

Simulator::Simulator(const Scene& scene, StartPose start, AgentConfig agent, SensorConfig sensor, int max_steps)
    : scene_(&scene), spawn_(start), agent_(agent), sensor_(sensor), max_steps_(max_steps) {
  agent_.validate();
  if (max_steps_ <= 0) throw ArgumentError("max_steps must be positive");
  if (!is_navigable(scene, start.position, agent_.radius))
    throw ArgumentError("start pose of the episode is not navigable");
  turns_per_rev_ = static_cast<int>(std::lround(360.0 / agent_.turn_deg));
  spawn_.heading = wrap_angle(spawn_.heading);
  state_.position = spawn_.position;
  state_.heading = spawn_.heading;
}

double Simulator::heading_for(int steps) const {
  return wrap_angle(spawn_.heading + steps * deg_to_rad(agent_.turn_deg));
}

Observation Simulator::observe() const {
  Observation obs;
  obs.gps = rotate(state_.position - spawn_.position, -spawn_.heading);
  obs.compass = wrap_angle(heading_steps_ * deg_to_rad(agent_.turn_deg));
  obs.depth = depth_scan();
  obs.collided = state_.last_collided;
  obs.step = state_.step_count;
  return obs;
}

std::vector<double> Simulator::depth_scan() const {
  return objnav::depth_scan(*scene_, state_.position, state_.heading, sensor_);
}

namespace {

// Outward normal of the obstacle closest to `p`.
std::optional<Vec2> contact_normal(const OccupancyGrid& grid, Vec2 p, double radius) {
  const double cs = grid.cell_size();
  const double reach = radius + 2 * cs;
  const int c0 = static_cast<int>(std::floor((p.x - reach) / cs));
  const int c1 = static_cast<int>(std::floor((p.x + reach) / cs));
  const int r0 = static_cast<int>(std::floor((p.y - reach) / cs));
  const int r1 = static_cast<int>(std::floor((p.y + reach) / cs));
  double best = std::numeric_limits<double>::infinity();
  Vec2 best_q{};
  for (int r = r0; r <= r1; ++r)
    for (int c = c0; c <= c1; ++c) {
      if (!grid.obstructed(r, c)) continue;
      const Aabb box = grid.box(r, c);
      const double d = distance_to_aabb(p, box);
      if (d < best) {
        best = d;
        best_q = closest_point_on_aabb(p, box);
      }
    }
  if (!(best > 0) || best == std::numeric_limits<double>::infinity()) return std::nullopt;
  return (1.0 / best) * (p - best_q);
}

}  // namespace

Vec2 Simulator::move_forward(bool& collided) const {
  const auto& grid = scene_->occupancy();
  const Vec2 from = state_.position;
  const Vec2 disp = agent_.step * unit_from_angle(state_.heading);
  collided = !segment_clear(grid, from, from + disp, agent_.radius);
  if (!collided) return from + disp;
  if (!agent_.sliding_enabled && !agent_.partial_advance) return from;

  // Contact point: the furthest clear fraction of the move.
  double lo = 0.0;
  double hi = 1.0;
  for (int i = 0; i < 50; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (segment_clear(grid, from, from + mid * disp, agent_.radius)) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  const Vec2 contact = from + lo * disp;
  if (!agent_.sliding_enabled) return contact;

  const auto normal = contact_normal(grid, contact, agent_.radius);
  if (!normal) return contact;
  Vec2 rest = (1.0 - lo) * disp;
  const double into = dot(rest, *normal);
  if (into < 0) rest = rest - into * *normal;
  const Vec2 slid = contact + rest;
  return segment_clear(grid, contact, slid, agent_.radius) ? slid : contact;
}

Observation Simulator::step(Action action) {
  if (state_.stopped) throw Error("step after STOP");
  if (state_.step_count >= max_steps_) throw Error("step budget exhausted");

  bool collided = false;
  switch (action) {
    case Action::MoveForward: {
      const Vec2 next = move_forward(collided);
      path_length_ += distance(state_.position, next);
      state_.position = next;
      break;
    }
    case Action::TurnLeft:
      heading_steps_ = (heading_steps_ + 1) % turns_per_rev_;
      break;
    case Action::TurnRight:
      heading_steps_ = (heading_steps_ - 1 + turns_per_rev_) % turns_per_rev_;
      break;
    case Action::LookUp:
      if ((pitch_steps_ + 1) * agent_.tilt_deg <= agent_.pitch_max_deg + 1e-9) ++pitch_steps_;
      break;
    case Action::LookDown:
      if ((pitch_steps_ - 1) * agent_.tilt_deg >= agent_.pitch_min_deg - 1e-9) --pitch_steps_;
      break;
    case Action::Stop:
      state_.stopped = true;
      break;
  }
  state_.heading = heading_for(heading_steps_);
  state_.pitch = deg_to_rad(pitch_steps_ * agent_.tilt_deg);
  state_.last_collided = collided;
  ++state_.step_count;
  trajectory_.push_back({state_.step_count, action, state_.position, state_.heading, state_.pitch, collided});
  return observe();
}

std::pair<Simulator, Observation> reset(const Scene& scene, const Episode& episode, const AgentConfig& agent,
                                        const SensorConfig& sensor, int max_steps) {
  if (episode.scene_id != scene.id())
    throw ArgumentError("episode '" + episode.episode_id + "' belongs to scene '" + episode.scene_id +
                        "', not '" + scene.id() + "'");
  Simulator sim(scene, episode.start, agent, sensor, max_steps);
  Observation first = sim.observe();
  return {std::move(sim), std::move(first)};
}

}  // namespace objnav

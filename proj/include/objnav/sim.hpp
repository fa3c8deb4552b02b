#pragma once

#include <array>
#include <iosfwd>
#include <optional>
#include <string_view>
#include <utility>
#include <vector>

#include "objnav/episode.hpp"
#include "objnav/scene.hpp"

namespace objnav {

enum class Action { MoveForward, TurnLeft, TurnRight, LookUp, LookDown, Stop };

inline constexpr std::array<Action, 6> kAllActions = {Action::MoveForward, Action::TurnLeft, Action::TurnRight,
                                                      Action::LookUp,      Action::LookDown, Action::Stop};

/// Wire names: "move-forward", "turn-left", "turn-right", "look-up", "look-down", "stop".
std::string_view action_name(Action a);
std::optional<Action> parse_action(std::string_view name);

struct AgentConfig {
  double radius = 0.18;
  double height = 0.88;
  double step = 0.25;
  double turn_deg = 30.0;
  double tilt_deg = 30.0;
  double pitch_min_deg = -30.0;
  double pitch_max_deg = 30.0;
  bool sliding_enabled = false;
  // Blocked forward moves advance to the contact point instead of staying put.
  // Only meaningful with sliding disabled.
  bool partial_advance = false;

  void validate() const;
};

struct SensorConfig {
  double hfov_deg = 79.0;
  int image_width = 640;
  double depth_min = 0.5;
  double depth_max = 6.0;

  int ray_count() const { return image_width / 8; }
};

/// Sensors exposed to the agent.
struct SensorGrant {
  bool gps_compass = true;
  bool depth = true;
};

struct AgentState {
  Vec2 position;
  double heading = 0.0;
  double pitch = 0.0;
  int step_count = 0;
  bool last_collided = false;
  bool stopped = false;
};

struct Observation {
  std::optional<Vec2> gps;          // episode frame, meters
  std::optional<double> compass;    // radians in (-pi, pi]
  std::optional<std::vector<double>> depth;
  bool collided = false;
  int step = 0;

  friend bool operator==(const Observation&, const Observation&) = default;
};

/// Removes sensors the agent was not granted.
Observation apply_grant(Observation obs, const SensorGrant& grant);

struct TrajectoryRecord {
  int step = 0;
  Action action = Action::Stop;
  Vec2 position;
  double heading = 0.0;
  double pitch = 0.0;
  bool collided = false;
};

void write_trajectory_jsonl(std::ostream& out, const std::vector<TrajectoryRecord>& records);

/// Deterministic discrete-action simulator over a shared immutable scene.
/// The scene must outlive the simulator.
class Simulator {
 public:
  Simulator(const Scene& scene, StartPose start, AgentConfig agent = {}, SensorConfig sensor = {},
            int max_steps = 500);

  Observation observe() const;
  /// Throws Error once the agent stopped or the step budget is spent.
  Observation step(Action action);

  const AgentState& state() const { return state_; }
  const StartPose& spawn() const { return spawn_; }
  const AgentConfig& agent_config() const { return agent_; }
  const SensorConfig& sensor_config() const { return sensor_; }
  const Scene& scene() const { return *scene_; }
  int max_steps() const { return max_steps_; }
  bool done() const { return state_.stopped || state_.step_count >= max_steps_; }

  /// Sum of displacements; turns and tilts add nothing.
  double path_length() const { return path_length_; }

  std::vector<double> depth_scan() const;
  const std::vector<TrajectoryRecord>& trajectory() const { return trajectory_; }

 private:
  Vec2 move_forward(bool& collided) const;
  double heading_for(int steps) const;

  const Scene* scene_;
  StartPose spawn_;
  AgentConfig agent_;
  SensorConfig sensor_;
  int max_steps_;
  int turns_per_rev_;
  int heading_steps_ = 0;
  int pitch_steps_ = 0;
  AgentState state_;
  double path_length_ = 0.0;
  std::vector<TrajectoryRecord> trajectory_;
};

/// Starts an episode: checks the scene id and that the start pose is navigable.
std::pair<Simulator, Observation> reset(const Scene& scene, const Episode& episode, const AgentConfig& agent = {},
                                        const SensorConfig& sensor = {}, int max_steps = 500);

/// Depth scan of `sensor.ray_count()` rays spread over heading +- hfov/2, left to right,
/// clipped to [depth_min, depth_max] with returns below depth_min reported as 0.
std::vector<double> depth_scan(const Scene& scene, Vec2 position, double heading, const SensorConfig& sensor);

/// World pose recovered from the spawn pose and an episode-frame GPS/compass reading.
StartPose world_pose(const StartPose& spawn, Vec2 gps, double compass);

}  // namespace objnav

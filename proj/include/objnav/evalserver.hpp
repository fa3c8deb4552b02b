#pragma once

#include <chrono>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "nlohmann/json.hpp"
#include "objnav/episodes.hpp"
#include "objnav/metrics.hpp"
#include "objnav/random.hpp"

namespace objnav {

using SceneMap = std::map<std::string, Scene, std::less<>>;

/// Loads every *.json scene file in `dir`, keyed by scene id.
SceneMap load_scene_dir(const std::filesystem::path& dir);

/// Throws ArgumentError naming the first episode whose scene is missing.
void check_dataset_scenes(const Dataset& dataset, const SceneMap& scenes);

/// Episode indices in run order: dataset order, or a deterministic shuffle.
std::vector<std::size_t> run_order(std::size_t count, std::optional<std::uint64_t> shuffle_seed);

/// Ground truth an in-process agent may be handed; remote agents never see it.
struct PrivilegedContext {
  const Scene* scene = nullptr;
  const NavGrid* grid = nullptr;
  const GeodesicField* zone = nullptr;
  const Episode* episode = nullptr;
  const AgentConfig* agent = nullptr;
};

class Agent {
 public:
  virtual ~Agent() = default;
  /// Called first for every episode, locally and over the wire.
  virtual void on_episode(const std::string& /*episode_id*/) {}
  virtual void attach_privileged(const PrivilegedContext&) {}
  /// `episode_index` counts episodes in run order from 0.
  virtual void reset(const std::string& goal_category, std::size_t episode_index) = 0;
  virtual Action act(const Observation& obs) = 0;
};

using AgentFactory = std::function<std::unique_ptr<Agent>()>;

class StopAgent : public Agent {
 public:
  void reset(const std::string&, std::size_t) override {}
  Action act(const Observation&) override { return Action::Stop; }
};

/// Uniform over all six actions; reseeded per episode from (seed, episode_index).
class RandomAgent : public Agent {
 public:
  explicit RandomAgent(std::uint64_t seed) : seed_(seed) {}
  void reset(const std::string& goal_category, std::size_t episode_index) override;
  Action act(const Observation& obs) override;

 private:
  std::uint64_t seed_;
  Rng rng_;
};

/// Forward until a collision, then turn left once.
class BumpAgent : public Agent {
 public:
  void reset(const std::string&, std::size_t) override { turned_ = false; }
  Action act(const Observation& obs) override;

 private:
  bool turned_ = false;
};

/// Plans with privileged pose and the zone field: a best-first search over the poses
/// reachable by turns and clear forward steps, replayed action by action and redone after
/// an unexpected collision. Stops within `tolerance` of the zone.
class OracleAgent : public Agent {
 public:
  explicit OracleAgent(double tolerance = 0.1) : tolerance_(tolerance) {}
  void attach_privileged(const PrivilegedContext& ctx) override { ctx_ = ctx; }
  void reset(const std::string&, std::size_t) override {
    pending_.clear();
    planned_ = false;
  }
  Action act(const Observation& obs) override;

 private:
  std::optional<std::vector<Action>> plan(Vec2 position, double heading) const;
  Action greedy(Vec2 position, double heading);

  double tolerance_;
  PrivilegedContext ctx_;
  std::deque<Action> pending_;
  bool planned_ = false;
};

/// Quantizes every float of an observation to 6 decimals, as on the wire.
Observation quantize(Observation obs);

struct RunConfig {
  EvalConfig eval;
  SensorGrant grant;
  std::optional<std::uint64_t> shuffle_seed;
  int jobs = 1;
};

/// One episode in progress: simulator plus scoring state. Shared by both drivers.
class EpisodeRun {
 public:
  EpisodeRun(const Scene& scene, const NavGrid& grid, const Episode& episode, const RunConfig& cfg);

  const Episode& episode() const { return *episode_; }
  PrivilegedContext privileged() const { return {scene_, grid_, &zone_, episode_, &cfg_->eval.agent}; }
  /// Granted, quantized observation at the current state.
  Observation observation() const;
  Observation step(Action a);
  bool done() const { return sim_.done(); }
  int steps() const { return sim_.state().step_count; }
  EpisodeResult finish(bool errored) const;
  const Simulator& simulator() const { return sim_; }

 private:
  const Scene* scene_;
  const NavGrid* grid_;
  const Episode* episode_;
  const RunConfig* cfg_;
  GeodesicField zone_;
  Simulator sim_;
};

/// Navgrids per scene at the evaluation radius, built once.
class GridCache {
 public:
  GridCache(const SceneMap& scenes, double radius);
  const NavGrid& at(const std::string& scene_id) const;

 private:
  std::map<std::string, NavGrid, std::less<>> grids_;
};

/// Runs `agent` on one episode. Agent exceptions end the episode as termination=error.
/// When `actions` is given it receives every action taken.
EpisodeResult run_episode(const Scene& scene, const NavGrid& grid, const Episode& episode, Agent& agent,
                          std::size_t episode_index, const RunConfig& cfg, std::vector<Action>* actions = nullptr);

/// In-process evaluation of a fresh agent per episode.
MetricsReport run_local(const Dataset& dataset, const SceneMap& scenes, const AgentFactory& agent,
                        const RunConfig& cfg);

// ---------------------------------------------------------------------------
// Wire service

inline constexpr int kProtocolVersion = 1;

class ProtocolError : public Error {
 public:
  ProtocolError(std::string code, const std::string& detail) : Error(code + ": " + detail), code_(std::move(code)) {}
  const std::string& code() const { return code_; }

 private:
  std::string code_;
};

struct SessionConfig {
  RunConfig run;
  std::string bind_address = "127.0.0.1";
  std::uint16_t port = 0;  // 0 picks a free port
  std::string label = "minival";
  std::chrono::milliseconds action_timeout{60'000};
};

struct SessionRecord {
  std::string label;
  std::string agent_name;
  std::vector<EpisodeResult> results;  // in run order
  std::optional<MetricsReport> report;
  std::string transcript_sha256;
};

void write_session_record(std::ostream& out, const SessionRecord& record);

/// Accepts one client and evaluates it over the whole dataset. `on_listening` receives the
/// bound port before accept. Throws ProtocolError("version_mismatch") when the client's
/// hello names another protocol version.
SessionRecord serve(const Dataset& dataset, const SceneMap& scenes, const SessionConfig& cfg,
                    const std::function<void(std::uint16_t)>& on_listening = {});

/// Blocking client for the wire protocol.
class WireClient {
 public:
  WireClient(const std::string& host, std::uint16_t port, const std::string& agent_name,
             int protocol_version = kProtocolVersion);
  ~WireClient();
  WireClient(const WireClient&) = delete;
  WireClient& operator=(const WireClient&) = delete;

  const nlohmann::json& handshake() const { return handshake_; }
  void send(const nlohmann::json& msg);
  void send_raw(const std::string& line);
  /// Next message; throws ProtocolError("disconnected") at end of stream.
  nlohmann::json receive();
  void close();

  /// Drives `agent` through every episode until session_end; returns its metrics.
  nlohmann::json run(Agent& agent);

 private:
  int fd_ = -1;
  std::string buffer_;
  nlohmann::json handshake_;
};

/// Observation carried by a reset or observation message.
Observation observation_from_wire(const nlohmann::json& obs);

}  // namespace objnav

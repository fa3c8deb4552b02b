#include "objnav/evalserver.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <fstream>
#include <mutex>
#include <queue>
#include <unordered_map>
#include <sstream>
#include <thread>

#include "objnav/digest.hpp"

namespace objnav {

SceneMap load_scene_dir(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw ArgumentError("scene directory '" + dir.string() + "' not found");
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".json" && entry.path().filename() != "manifest.json")
      files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  SceneMap scenes;
  for (const auto& f : files) {
    std::ifstream in(f, std::ios::binary);
    if (!in) throw Error("cannot read " + f.string());
    auto s = [&] {
      try {
        return load_scene(in);
      } catch (const Error& e) {
        throw Error(f.string() + ": " + e.what());
      }
    }();
    const std::string id = s.id();
    if (!scenes.emplace(id, std::move(s)).second)
      throw ValidationError("unique_scene_id", "scene id '" + id + "' appears twice in " + dir.string());
  }
  if (scenes.empty()) throw ArgumentError("no scene files in '" + dir.string() + "'");
  return scenes;
}

void check_dataset_scenes(const Dataset& dataset, const SceneMap& scenes) {
  for (const auto& ep : dataset.episodes)
    if (!scenes.contains(ep.scene_id))
      throw ArgumentError("episode '" + ep.episode_id + "' references scene '" + ep.scene_id +
                          "', which is not among the provided scenes");
}

std::vector<std::size_t> run_order(std::size_t count, std::optional<std::uint64_t> shuffle_seed) {
  std::vector<std::size_t> order(count);
  for (std::size_t i = 0; i < count; ++i) order[i] = i;
  if (shuffle_seed && count > 1) {
    Rng rng(*shuffle_seed);
    for (std::size_t i = count - 1; i > 0; --i) std::swap(order[i], order[uniform_index(rng, i + 1)]);
  }
  return order;
}

// ---------------------------------------------------------------------------
// Agents

void RandomAgent::reset(const std::string&, std::size_t episode_index) {
  rng_.seed(derive_seed(seed_, episode_index));
}

Action RandomAgent::act(const Observation&) { return kAllActions[uniform_index(rng_, kAllActions.size())]; }

Action BumpAgent::act(const Observation& obs) {
  if (obs.collided && !turned_) {
    turned_ = true;
    return Action::TurnLeft;
  }
  turned_ = false;
  return Action::MoveForward;
}

namespace {

struct PlanNode {
  Vec2 position;
  int quantum;
  double cost;
  std::int64_t parent;
  Action action;
};

}  // namespace

// Best-first search over the poses reachable by the action set, with forward steps that
// keep a margin from every obstruction. Poses are merged on a 2 cm x heading lattice but
// every successor is expanded from the pose actually reached, so the plan replays exactly.
std::optional<std::vector<Action>> OracleAgent::plan(Vec2 position, double heading) const {
  const NavGrid& grid = *ctx_.grid;
  const GeodesicField& zone = *ctx_.zone;
  const AgentConfig& agent = *ctx_.agent;
  const int per_rev = static_cast<int>(std::lround(360.0 / agent.turn_deg));
  const double turn = deg_to_rad(agent.turn_deg);
  const double margin = agent.radius + 1e-4;
  const auto wrap_q = [per_rev](int q) { return ((q % per_rev) + per_rev) % per_rev; };
  const auto key = [per_rev](Vec2 p, int q) {
    return (std::llround(p.x / 0.02) * 100'003 + std::llround(p.y / 0.02)) * per_rev + q;
  };
  const auto estimate = [&](Vec2 p) { return zone.at(grid, p) / agent.step; };

  std::vector<PlanNode> nodes;
  std::unordered_map<long long, double> best;
  using Entry = std::pair<double, std::int64_t>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
  const int q0 = wrap_q(static_cast<int>(std::lround(wrap_angle(heading) / turn)));
  nodes.push_back({position, q0, 0.0, -1, Action::Stop});
  best[key(position, q0)] = 0.0;
  open.emplace(estimate(position), 0);

  constexpr std::size_t kMaxNodes = 2'000'000;
  while (!open.empty() && nodes.size() < kMaxNodes) {
    const std::int64_t i = open.top().second;
    open.pop();
    const PlanNode node = nodes[static_cast<std::size_t>(i)];
    if (node.cost > best[key(node.position, node.quantum)]) continue;
    if (zone.at(grid, node.position) <= tolerance_) {
      std::vector<Action> actions;
      for (std::int64_t j = i; nodes[static_cast<std::size_t>(j)].parent >= 0;
           j = nodes[static_cast<std::size_t>(j)].parent)
        actions.push_back(nodes[static_cast<std::size_t>(j)].action);
      std::reverse(actions.begin(), actions.end());
      return actions;
    }
    const auto push = [&](Vec2 p, int q, double step_cost, Action a) {
      const double cost = node.cost + step_cost;
      const auto [it, fresh] = best.try_emplace(key(p, q), cost);
      if (!fresh) {
        if (cost >= it->second) return;
        it->second = cost;
      }
      nodes.push_back({p, q, cost, i, a});
      open.emplace(cost + estimate(p), static_cast<std::int64_t>(nodes.size() - 1));
    };
    // Turning costs a quarter of a step so the search prefers short paths over few actions.
    push(node.position, wrap_q(node.quantum + 1), 0.25, Action::TurnLeft);
    push(node.position, wrap_q(node.quantum - 1), 0.25, Action::TurnRight);
    const Vec2 land = node.position + agent.step * unit_from_angle(node.quantum * turn);
    if (segment_clear(grid.occupancy(), node.position, land, margin) && zone.at(grid, land) < kInfinity)
      push(land, node.quantum, 1.0, Action::MoveForward);
  }
  return std::nullopt;
}

// One step of field descent, used when the search finds nothing.
Action OracleAgent::greedy(Vec2 position, double heading) {
  const NavGrid& grid = *ctx_.grid;
  const GeodesicField& zone = *ctx_.zone;
  const AgentConfig& agent = *ctx_.agent;
  const int per_rev = static_cast<int>(std::lround(360.0 / agent.turn_deg));
  const double turn = deg_to_rad(agent.turn_deg);
  const double margin = agent.radius + 1e-4;
  int best_k = 0;
  double best = kInfinity;
  double straight = kInfinity;
  for (int i = 0; i < per_rev; ++i) {
    const int k = (i % 2 == 1 ? 1 : -1) * ((i + 1) / 2);
    if (k == -per_rev / 2) continue;
    const Vec2 land = position + agent.step * unit_from_angle(heading + k * turn);
    if (!segment_clear(grid.occupancy(), position, land, margin)) continue;
    const double v = zone.at(grid, land);
    if (k == 0) straight = v;
    if (v < best - 1e-9) {
      best = v;
      best_k = k;
    }
  }
  if (best == kInfinity) return Action::Stop;
  if (straight <= best + 0.01) best_k = 0;
  for (int t = 0; t < std::abs(best_k); ++t) pending_.push_back(best_k > 0 ? Action::TurnLeft : Action::TurnRight);
  pending_.push_back(Action::MoveForward);
  const Action a = pending_.front();
  pending_.pop_front();
  return a;
}

Action OracleAgent::act(const Observation& obs) {
  if (!ctx_.grid || !ctx_.zone || !ctx_.episode || !ctx_.agent)
    throw Error("oracle agent was not given the episode's ground truth");
  if (!obs.gps || !obs.compass) throw Error("oracle agent needs the GPS+compass sensor");
  const StartPose pose = world_pose(ctx_.episode->start, *obs.gps, *obs.compass);
  if (obs.collided) pending_.clear();
  if (pending_.empty()) {
    if (ctx_.zone->at(*ctx_.grid, pose.position) <= tolerance_) return Action::Stop;
    if (planned_ && !obs.collided) return greedy(pose.position, pose.heading);
    planned_ = true;
    auto actions = plan(pose.position, pose.heading);
    if (!actions) return greedy(pose.position, pose.heading);
    pending_.assign(actions->begin(), actions->end());
    if (pending_.empty()) return Action::Stop;
  }
  const Action a = pending_.front();
  pending_.pop_front();
  return a;
}

// ---------------------------------------------------------------------------
// Episode runner

Observation quantize(Observation obs) {
  if (obs.gps) obs.gps = Vec2{round6(obs.gps->x), round6(obs.gps->y)};
  if (obs.compass) obs.compass = round6(*obs.compass);
  if (obs.depth)
    for (double& d : *obs.depth) d = round6(d);
  return obs;
}

EpisodeRun::EpisodeRun(const Scene& scene, const NavGrid& grid, const Episode& episode, const RunConfig& cfg)
    : scene_(&scene), grid_(&grid), episode_(&episode), cfg_(&cfg),
      zone_(viewpoint_field(grid, episode.viewpoint_positions())),
      sim_(reset(scene, episode, cfg.eval.agent, cfg.eval.sensor, cfg.eval.max_steps).first) {}

Observation EpisodeRun::observation() const { return quantize(apply_grant(sim_.observe(), cfg_->grant)); }

Observation EpisodeRun::step(Action a) { return quantize(apply_grant(sim_.step(a), cfg_->grant)); }

EpisodeResult EpisodeRun::finish(bool errored) const {
  const AgentState& st = sim_.state();
  const SuccessResult sr = evaluate_success(*scene_, *grid_, zone_, *episode_, st, cfg_->eval);
  EpisodeResult r;
  r.episode_id = episode_->episode_id;
  r.termination = errored ? Termination::Error : st.stopped ? Termination::Stop : Termination::Budget;
  r.success = errored ? 0 : sr.success;
  r.l = episode_->info.geodesic;
  r.p = sim_.path_length();
  r.spl = spl(r.success, r.l, r.p);
  r.steps = st.step_count;
  r.final_geodesic_to_zone = sr.reasons.geodesic_to_zone;
  return r;
}

GridCache::GridCache(const SceneMap& scenes, double radius) {
  for (const auto& [id, scene] : scenes) grids_.emplace(id, build_navgrid(scene, radius));
}

const NavGrid& GridCache::at(const std::string& scene_id) const {
  const auto it = grids_.find(scene_id);
  if (it == grids_.end()) throw ArgumentError("no navgrid for scene '" + scene_id + "'");
  return it->second;
}

EpisodeResult run_episode(const Scene& scene, const NavGrid& grid, const Episode& episode, Agent& agent,
                          std::size_t episode_index, const RunConfig& cfg, std::vector<Action>* actions) {
  EpisodeRun run(scene, grid, episode, cfg);
  bool errored = false;
  try {
    agent.on_episode(episode.episode_id);
    agent.attach_privileged(run.privileged());
    agent.reset(episode.goal_category, episode_index);
    Observation obs = run.observation();
    while (!run.done()) {
      const Action a = agent.act(obs);
      if (actions) actions->push_back(a);
      obs = run.step(a);
    }
  } catch (const std::exception&) {
    errored = true;
  }
  return run.finish(errored);
}

MetricsReport run_local(const Dataset& dataset, const SceneMap& scenes, const AgentFactory& make_agent,
                        const RunConfig& cfg) {
  cfg.eval.validate();
  check_dataset_scenes(dataset, scenes);
  const GridCache grids(scenes, cfg.eval.agent.radius);
  const auto order = run_order(dataset.episodes.size(), cfg.shuffle_seed);
  std::vector<EpisodeResult> results(order.size());

  std::size_t next = 0;
  std::mutex mu;
  auto worker = [&] {
    for (;;) {
      std::size_t i;
      {
        std::lock_guard lock(mu);
        if (next >= order.size()) return;
        i = next++;
      }
      const Episode& ep = dataset.episodes[order[i]];
      auto agent = make_agent();
      results[i] = run_episode(scenes.find(ep.scene_id)->second, grids.at(ep.scene_id), ep, *agent, i, cfg);
    }
  };
  const int jobs = std::max(1, cfg.jobs);
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  return aggregate(std::move(results));
}

// ---------------------------------------------------------------------------
// Wire format

namespace {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

ojson observation_to_wire(const Observation& obs) {
  ojson j = ojson::object();
  if (obs.gps) j["gps"] = {obs.gps->x, obs.gps->y};
  if (obs.compass) j["compass"] = *obs.compass;
  if (obs.depth) j["depth"] = *obs.depth;
  j["collided"] = obs.collided;
  j["step"] = obs.step;
  return j;
}

ojson error_msg(const std::string& code, const std::string& detail) {
  return ojson{{"type", "error"}, {"code", code}, {"detail", detail}};
}

ojson metrics_summary(const MetricsReport& r) {
  ojson m;
  m["N"] = r.n;
  m["spl"] = round6(r.spl);
  m["success_rate"] = round6(r.success_rate);
  if (std::isfinite(r.mean_final_geodesic)) {
    m["mean_final_geodesic"] = round6(r.mean_final_geodesic);
  } else {
    m["mean_final_geodesic"] = nullptr;
  }
  return m;
}

// Newline-delimited messages over a connected socket.
class LineChannel {
 public:
  explicit LineChannel(int fd) : fd_(fd) {}

  enum class Status { Line, Closed, Timeout, TooLong };

  Status read_line(std::string& line, int timeout_ms) {
    constexpr std::size_t kMaxLine = 1 << 20;
    const auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(timeout_ms);
    for (;;) {
      if (const auto nl = buffer_.find('\n'); nl != std::string::npos) {
        line = buffer_.substr(0, nl);
        buffer_.erase(0, nl + 1);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return Status::Line;
      }
      if (buffer_.size() > kMaxLine) return Status::TooLong;
      const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
      if (timeout_ms >= 0 && left.count() <= 0) return Status::Timeout;
      pollfd p{fd_, POLLIN, 0};
      const int rc = ::poll(&p, 1, timeout_ms < 0 ? -1 : static_cast<int>(left.count()));
      if (rc < 0) {
        if (errno == EINTR) continue;
        return Status::Closed;
      }
      if (rc == 0) return Status::Timeout;
      char buf[4096];
      const ssize_t n = ::recv(fd_, buf, sizeof buf, 0);
      if (n < 0 && errno == EINTR) continue;
      if (n <= 0) return Status::Closed;
      buffer_.append(buf, static_cast<std::size_t>(n));
    }
  }

  bool write_line(const std::string& line) {
    std::string data = line + "\n";
    std::size_t sent = 0;
    while (sent < data.size()) {
      const ssize_t n = ::send(fd_, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
      if (n < 0 && errno == EINTR) continue;
      if (n <= 0) return false;
      sent += static_cast<std::size_t>(n);
    }
    return true;
  }

 private:
  int fd_;
  std::string buffer_;
};

struct FdGuard {
  int fd = -1;
  ~FdGuard() {
    if (fd >= 0) ::close(fd);
  }
};

// Session side of the protocol, recording every line into the transcript hash.
class ServerSession {
 public:
  ServerSession(int fd, std::chrono::milliseconds timeout) : chan_(fd), timeout_(static_cast<int>(timeout.count())) {}

  bool send(const ojson& msg) {
    const std::string line = msg.dump();
    transcript_.update("S ");
    transcript_.update(line);
    transcript_.update("\n");
    return chan_.write_line(line);
  }

  LineChannel::Status receive(std::string& line) {
    const auto st = chan_.read_line(line, timeout_);
    if (st == LineChannel::Status::Line) {
      transcript_.update("C ");
      transcript_.update(line);
      transcript_.update("\n");
    }
    return st;
  }

  std::string digest() { return transcript_.hex_digest(); }

 private:
  LineChannel chan_;
  int timeout_;
  Sha256 transcript_;
};

std::optional<json> parse_message(const std::string& line) {
  try {
    json j = json::parse(line);
    if (j.is_object() && j.contains("type") && j["type"].is_string()) return j;
  } catch (const json::parse_error&) {
  }
  return std::nullopt;
}

}  // namespace

Observation observation_from_wire(const json& j) {
  Observation obs;
  if (j.contains("gps")) obs.gps = Vec2{j["gps"].at(0).get<double>(), j["gps"].at(1).get<double>()};
  if (j.contains("compass")) obs.compass = j["compass"].get<double>();
  if (j.contains("depth")) obs.depth = j["depth"].get<std::vector<double>>();
  obs.collided = j.value("collided", false);
  obs.step = j.value("step", 0);
  return obs;
}

void write_session_record(std::ostream& out, const SessionRecord& record) {
  ojson j;
  j["label"] = record.label;
  j["agent_name"] = record.agent_name;
  j["transcript_sha256"] = record.transcript_sha256;
  if (record.report) {
    std::ostringstream rep;
    write_report_json(rep, *record.report);
    j["report"] = ojson::parse(rep.str());
  } else {
    j["report"] = nullptr;
  }
  out << j.dump(2) << '\n';
}

SessionRecord serve(const Dataset& dataset, const SceneMap& scenes, const SessionConfig& cfg,
                    const std::function<void(std::uint16_t)>& on_listening) {
  const RunConfig& run_cfg = cfg.run;
  run_cfg.eval.validate();
  check_dataset_scenes(dataset, scenes);
  const GridCache grids(scenes, run_cfg.eval.agent.radius);

  FdGuard listener{::socket(AF_INET, SOCK_STREAM, 0)};
  if (listener.fd < 0) throw Error(std::string("socket: ") + std::strerror(errno));
  const int one = 1;
  ::setsockopt(listener.fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(cfg.port);
  if (::inet_pton(AF_INET, cfg.bind_address.c_str(), &addr.sin_addr) != 1)
    throw ArgumentError("bad bind address '" + cfg.bind_address + "'");
  if (::bind(listener.fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0)
    throw Error("bind port " + std::to_string(cfg.port) + ": " + std::strerror(errno));
  if (::listen(listener.fd, 1) < 0) throw Error(std::string("listen: ") + std::strerror(errno));
  socklen_t len = sizeof addr;
  ::getsockname(listener.fd, reinterpret_cast<sockaddr*>(&addr), &len);
  if (on_listening) on_listening(ntohs(addr.sin_port));

  FdGuard conn{::accept(listener.fd, nullptr, nullptr)};
  if (conn.fd < 0) throw Error(std::string("accept: ") + std::strerror(errno));
  ::close(listener.fd);
  listener.fd = -1;
  ::setsockopt(conn.fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);

  ServerSession session(conn.fd, cfg.action_timeout);
  SessionRecord record;
  record.label = cfg.label;

  ojson sensors = ojson::array();
  if (run_cfg.grant.gps_compass) sensors.push_back("gps_compass");
  if (run_cfg.grant.depth) sensors.push_back("depth_scan");
  session.send({{"type", "handshake"},
                {"protocol_version", kProtocolVersion},
                {"episode_count", dataset.episodes.size()},
                {"sensors", sensors}});

  std::string line;
  const auto st = session.receive(line);
  if (st != LineChannel::Status::Line) throw ProtocolError("disconnected", "client sent no hello");
  const auto hello = parse_message(line);
  if (!hello || (*hello)["type"] != "hello" || !hello->contains("protocol_version")) {
    session.send(error_msg("malformed", "expected a hello message"));
    throw ProtocolError("malformed", "expected a hello message");
  }
  if ((*hello)["protocol_version"] != kProtocolVersion) {
    session.send(error_msg("version_mismatch", "server speaks protocol version " + std::to_string(kProtocolVersion)));
    throw ProtocolError("version_mismatch", "client protocol version " + (*hello)["protocol_version"].dump());
  }
  record.agent_name = hello->value("agent_name", "");

  bool connected = true;
  const auto order = run_order(dataset.episodes.size(), run_cfg.shuffle_seed);
  for (std::size_t idx : order) {
    const Episode& ep = dataset.episodes[idx];
    EpisodeRun run(scenes.find(ep.scene_id)->second, grids.at(ep.scene_id), ep, run_cfg);
    bool errored = false;
    connected = session.send({{"type", "reset"},
                              {"episode_id", ep.episode_id},
                              {"goal_category", ep.goal_category},
                              {"observation", observation_to_wire(run.observation())}});
    while (connected && !run.done()) {
      const auto rs = session.receive(line);
      if (rs == LineChannel::Status::Closed) {
        connected = false;
        break;
      }
      if (rs == LineChannel::Status::Timeout) {
        session.send(error_msg("timeout", "no action within " + std::to_string(cfg.action_timeout.count()) + " ms"));
        errored = true;
        break;
      }
      if (rs == LineChannel::Status::TooLong) {
        session.send(error_msg("malformed", "message exceeds 1 MiB"));
        errored = true;
        break;
      }
      const auto msg = parse_message(line);
      if (!msg || (*msg)["type"] != "action" || !msg->contains("name") || !(*msg)["name"].is_string()) {
        session.send(error_msg("malformed", "expected an action message"));
        errored = true;
        break;
      }
      const auto action = parse_action((*msg)["name"].get<std::string>());
      if (!action) {
        session.send(error_msg("bad_action", "unknown action '" + (*msg)["name"].get<std::string>() + "'"));
        errored = true;
        break;
      }
      const Observation obs = run.step(*action);
      if (!run.done()) connected = session.send({{"type", "observation"}, {"observation", observation_to_wire(obs)}});
    }
    const EpisodeResult result = run.finish(errored || !connected);
    record.results.push_back(result);
    if (!connected) break;
    connected = session.send({{"type", "episode_end"},
                              {"success", result.success == 1},
                              {"spl", round6(result.spl)},
                              {"steps", result.steps}});
    if (!connected) break;
  }
  if (!record.results.empty()) record.report = aggregate(record.results);
  if (connected) {
    session.send({{"type", "session_end"}, {"metrics", record.report ? metrics_summary(*record.report) : ojson()}});
  }
  record.transcript_sha256 = session.digest();
  return record;
}

// ---------------------------------------------------------------------------
// Client

WireClient::WireClient(const std::string& host, std::uint16_t port, const std::string& agent_name,
                       int protocol_version) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  if (::getaddrinfo(host.c_str(), std::to_string(port).c_str(), &hints, &res) != 0 || !res)
    throw Error("cannot resolve '" + host + "'");
  fd_ = ::socket(res->ai_family, res->ai_socktype, res->ai_protocol);
  const int rc = fd_ < 0 ? -1 : ::connect(fd_, res->ai_addr, res->ai_addrlen);
  ::freeaddrinfo(res);
  if (rc < 0) {
    const std::string why = std::strerror(errno);
    close();
    throw Error("connect to " + host + ":" + std::to_string(port) + ": " + why);
  }
  const int one = 1;
  ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
  handshake_ = receive();
  if (handshake_.value("type", "") != "handshake") throw ProtocolError("malformed", "expected a handshake");
  if (handshake_.value("protocol_version", -1) != kProtocolVersion)
    throw ProtocolError("version_mismatch", "server speaks version " + handshake_["protocol_version"].dump());
  send({{"type", "hello"}, {"protocol_version", protocol_version}, {"agent_name", agent_name}});
}

WireClient::~WireClient() { close(); }

void WireClient::close() {
  if (fd_ >= 0) ::close(fd_);
  fd_ = -1;
}

void WireClient::send_raw(const std::string& line) {
  if (fd_ < 0 || !LineChannel(fd_).write_line(line)) throw ProtocolError("disconnected", "send failed");
}

void WireClient::send(const json& msg) { send_raw(msg.dump()); }

json WireClient::receive() {
  for (;;) {
    if (const auto nl = buffer_.find('\n'); nl != std::string::npos) {
      const std::string line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      try {
        return json::parse(line);
      } catch (const json::parse_error& e) {
        throw ProtocolError("malformed", e.what());
      }
    }
    if (fd_ < 0) throw ProtocolError("disconnected", "connection closed");
    char buf[4096];
    const ssize_t n = ::recv(fd_, buf, sizeof buf, 0);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) throw ProtocolError("disconnected", "connection closed by server");
    buffer_.append(buf, static_cast<std::size_t>(n));
  }
}

json WireClient::run(Agent& agent) {
  std::size_t episode = 0;
  for (;;) {
    const json msg = receive();
    const std::string type = msg.value("type", "");
    if (type == "reset") {
      agent.on_episode(msg.at("episode_id").get<std::string>());
      agent.reset(msg.at("goal_category").get<std::string>(), episode++);
      send({{"type", "action"}, {"name", action_name(agent.act(observation_from_wire(msg.at("observation"))))}});
    } else if (type == "observation") {
      send({{"type", "action"}, {"name", action_name(agent.act(observation_from_wire(msg.at("observation"))))}});
    } else if (type == "session_end") {
      return msg.value("metrics", json());
    } else if (type != "episode_end" && type != "error") {
      throw ProtocolError("malformed", "unexpected message type '" + type + "'");
    }
  }
}

}  // namespace objnav

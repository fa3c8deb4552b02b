// objnav-agent: connects a built-in policy to a running `objnav eval --serve`.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "objnav/evalserver.hpp"

using namespace objnav;

namespace {

// Oracle driven from the client's own copy of the dataset and scenes; the server reveals
// nothing privileged, so the ground truth is rebuilt locally per episode id.
class RemoteOracle : public Agent {
 public:
  RemoteOracle(Dataset dataset, SceneMap scenes, AgentConfig agent)
      : dataset_(std::move(dataset)), scenes_(std::move(scenes)), agent_(agent), grids_(scenes_, agent.radius) {
    for (const auto& ep : dataset_.episodes) by_id_.emplace(ep.episode_id, &ep);
  }

  void on_episode(const std::string& episode_id) override {
    const auto it = by_id_.find(episode_id);
    if (it == by_id_.end()) throw Error("episode '" + episode_id + "' is not in the local dataset");
    const Episode& ep = *it->second;
    const NavGrid& grid = grids_.at(ep.scene_id);
    zone_ = viewpoint_field(grid, ep.viewpoint_positions());
    inner_.attach_privileged({&scenes_.find(ep.scene_id)->second, &grid, &zone_, &ep, &agent_});
  }
  void reset(const std::string& goal, std::size_t index) override { inner_.reset(goal, index); }
  Action act(const Observation& obs) override { return inner_.act(obs); }

 private:
  Dataset dataset_;
  SceneMap scenes_;
  AgentConfig agent_;
  GridCache grids_;
  std::map<std::string, const Episode*> by_id_;
  GeodesicField zone_;
  OracleAgent inner_;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Remote agent for the objnav evaluation service"};
  std::string host = "127.0.0.1";
  int port = 0;
  std::string agent_name = "stop";
  std::uint64_t seed = 0;
  std::string dataset_path;
  std::string scenes_dir;
  int protocol_version = kProtocolVersion;
  app.add_option("--host", host, "Server host");
  app.add_option("--port", port, "Server port")->required()->check(CLI::Range(1, 65535));
  app.add_option("--agent", agent_name, "Policy")->check(CLI::IsMember({"stop", "random", "bump", "oracle"}));
  app.add_option("--seed", seed, "Seed of the random policy")->envname("OBJNAV_SEED");
  app.add_option("--dataset", dataset_path, "Dataset file (oracle only)")->check(CLI::ExistingFile);
  app.add_option("--scenes", scenes_dir, "Scene directory (oracle only)")->check(CLI::ExistingDirectory);
  app.add_option("--protocol-version", protocol_version, "Protocol version to announce");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    std::unique_ptr<Agent> agent;
    if (agent_name == "stop") {
      agent = std::make_unique<StopAgent>();
    } else if (agent_name == "random") {
      agent = std::make_unique<RandomAgent>(seed);
    } else if (agent_name == "bump") {
      agent = std::make_unique<BumpAgent>();
    } else {
      if (dataset_path.empty() || scenes_dir.empty()) {
        std::cerr << "usage error: --agent oracle needs --dataset and --scenes\n";
        return 2;
      }
      std::ifstream in(dataset_path, std::ios::binary);
      agent = std::make_unique<RemoteOracle>(read_dataset(in), load_scene_dir(scenes_dir), AgentConfig{});
    }
    WireClient client(host, static_cast<std::uint16_t>(port), agent_name, protocol_version);
    const auto metrics = client.run(*agent);
    std::cout << metrics.dump() << '\n';
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

// objnav: scene generation, episode datasets, evaluation and SPL diagnostics.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "nlohmann/json.hpp"
#include "objnav/digest.hpp"
#include "objnav/evalserver.hpp"

namespace fs = std::filesystem;
using namespace objnav;
using ojson = nlohmann::ordered_json;

namespace {

constexpr const char* kToolVersion = "0.1.0";

// Problems with the invocation rather than the inputs; exit code 2.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw UsageError("cannot create output directory '" + dir.string() + "'");
  const fs::path probe = dir / ".objnav-write-test";
  std::ofstream out(probe);
  if (!out) throw UsageError("output directory '" + dir.string() + "' is not writable");
  out.close();
  fs::remove(probe, ec);
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) ensure_dir(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UsageError("cannot write '" + path.string() + "'");
  return out;
}

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read '" + path.string() + "'");
  return in;
}

// Flat JSON config whose keys mirror long flag names. Fills options the command line left unset.
class ConfigFile {
 public:
  void load(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot read config file '" + path.string() + "'");
    try {
      json_ = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
      throw UsageError("config file '" + path.string() + "': " + e.what());
    }
    if (!json_.is_object()) throw UsageError("config file must hold a JSON object");
  }

  // Config values become option defaults, so flags still take precedence.
  void apply(CLI::App* app) const {
    if (json_.is_null()) return;
    for (CLI::Option* opt : app->get_options()) {
      if (opt->get_lnames().empty()) continue;
      const auto it = json_.find(opt->get_lnames().front());
      if (it == json_.end()) continue;
      try {
        if (it->is_array()) {
          opt->default_val(it->get<std::vector<std::string>>());
        } else {
          opt->default_val(it->is_string() ? it->get<std::string>() : it->dump());
        }
      } catch (const std::exception& e) {
        throw UsageError("config key '" + it.key() + "': " + e.what());
      }
      opt->required(false);
    }
  }

 private:
  nlohmann::json json_;
};

// Every run writes one of these next to its outputs.
class Manifest {
 public:
  Manifest(std::string command, const CLI::App* sub) : command_(std::move(command)) {
    for (const CLI::Option* opt : sub->get_options()) {
      if (opt->get_lnames().empty() || opt->get_lnames().front() == "help") continue;
      const auto& res = opt->results();
      const std::string key = opt->get_lnames().front();
      if (res.empty()) {
        if (!opt->get_default_str().empty()) config_[key] = opt->get_default_str();
      } else {
        config_[key] = res.size() == 1 ? ojson(res.front()) : ojson(res);
      }
    }
  }

  void seed(const std::string& name, std::uint64_t value) { seeds_[name] = value; }
  void input(const fs::path& p) { inputs_[p.generic_string()] = sha256_file(p); }
  void output(const fs::path& p) { outputs_[p.generic_string()] = sha256_file(p); }

  void write(const fs::path& path) const {
    ojson j;
    j["command"] = command_;
    j["tool_version"] = kToolVersion;
    j["config"] = config_;
    j["seeds"] = seeds_;
    j["inputs"] = inputs_;
    j["outputs"] = outputs_;
    auto out = open_out(path);
    out << j.dump(2) << '\n';
  }

 private:
  std::string command_;
  ojson config_ = ojson::object();
  ojson seeds_ = ojson::object();
  ojson inputs_ = ojson::object();
  ojson outputs_ = ojson::object();
};

void add_scene_inputs(Manifest& m, const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.path().extension() == ".json" && e.path().filename() != "manifest.json") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  for (const auto& f : files) m.input(f);
}

std::string scene_name(std::uint64_t seed, int k) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "scene_%llu_%03d", static_cast<unsigned long long>(seed), k);
  return buf;
}

// ---------------------------------------------------------------------------

struct SceneGenArgs {
  std::string out;
  int count = 1;
  std::uint64_t seed = 0;
  double width = 20.0;
  double height = 20.0;
  int rooms = 4;
  double cell_size = 0.05;
  int objects_min = 1;
  int objects_max = 2;
  std::string categories;
};

int cmd_scene_gen(const SceneGenArgs& a, const CLI::App* sub) {
  ensure_dir(a.out);
  if (a.objects_min > a.objects_max) throw UsageError("--objects-min must not exceed --objects-max");
  SceneParams base;
  base.width = a.width;
  base.height = a.height;
  base.room_count = a.rooms;
  base.cell_size = a.cell_size;
  base.objects_min = a.objects_min;
  base.objects_max = a.objects_max;
  Manifest manifest("scene gen", sub);
  manifest.seed("seed", a.seed);
  if (!a.categories.empty()) {
    auto in = open_in(a.categories);
    base.category_table = load_category_table(in);
    manifest.input(a.categories);
  }
  for (int k = 0; k < a.count; ++k) {
    SceneParams p = base;
    p.seed = derive_seed(a.seed, static_cast<std::uint64_t>(k));
    p.scene_id = scene_name(a.seed, k);
    const Scene scene = generate_scene(p);
    const fs::path file = fs::path(a.out) / (scene.id() + ".json");
    {
      auto out = open_out(file);
      save_scene(scene, out);
    }
    manifest.output(file);
    std::cout << file.string() << '\n';
  }
  manifest.write(fs::path(a.out) / "manifest.json");
  return 0;
}

int cmd_scene_validate(const std::vector<std::string>& paths) {
  int bad = 0;
  for (const auto& path : paths) {
    std::vector<fs::path> files;
    if (fs::is_directory(path)) {
      for (const auto& e : fs::directory_iterator(path))
        if (e.path().extension() == ".json" && e.path().filename() != "manifest.json") files.push_back(e.path());
      std::sort(files.begin(), files.end());
    } else {
      files.emplace_back(path);
    }
    for (const auto& f : files) {
      try {
        auto in = open_in(f);
        const Scene s = load_scene(in);
        std::cout << "ok " << f.string() << " (" << s.id() << ", " << s.objects().size() << " objects)\n";
      } catch (const Error& e) {
        std::cout << "invalid " << f.string() << ": " << e.what() << '\n';
        ++bad;
      }
    }
  }
  return bad == 0 ? 0 : 1;
}

struct EpisodesGenArgs {
  std::string scenes;
  std::string profile = "habitat";
  int count_per_scene = 100;
  double r_success = 1.0;
  std::uint64_t seed = 0;
  std::string out;
};

int cmd_episodes_gen(const EpisodesGenArgs& a, int jobs, const CLI::App* sub) {
  const SceneMap scenes = load_scene_dir(a.scenes);
  std::vector<Scene> list;
  for (const auto& [id, s] : scenes) list.push_back(s);
  EpisodeGenConfig cfg;
  cfg.profile = GenerationProfile::by_name(a.profile);
  cfg.count_per_scene = a.count_per_scene;
  cfg.r_success = a.r_success;
  cfg.seed = a.seed;
  cfg.jobs = jobs;
  std::vector<Episode> episodes;
  try {
    episodes = generate_episodes(list, cfg);
  } catch (const GenerationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  {
    auto out = open_out(a.out);
    write_dataset(out, {cfg.profile, cfg.r_success, cfg.seed}, episodes);
  }
  Manifest m("episodes gen", sub);
  m.seed("seed", a.seed);
  add_scene_inputs(m, a.scenes);
  m.output(a.out);
  m.write(a.out + ".manifest.json");
  std::cout << episodes.size() << " episodes written to " << a.out << '\n';
  return 0;
}

int cmd_episodes_stats(const std::string& dataset, const std::string& out_path, const CLI::App* sub) {
  auto in = open_in(dataset);
  const Dataset ds = read_dataset(in);
  const StatsReport report = dataset_stats(ds.episodes);
  {
    auto out = open_out(out_path);
    write_stats_csv(out, report);
  }
  Manifest m("episodes stats", sub);
  m.input(dataset);
  m.output(out_path);
  m.write(out_path + ".manifest.json");
  for (const auto& s : report.metrics)
    std::printf("%-10s min %.6f  max %.6f  mean %.6f  median %.6f\n", s.metric.c_str(), s.min, s.max, s.mean,
                s.median);
  return 0;
}

struct EvalArgs {
  std::vector<std::string> datasets;
  std::string scenes;
  std::string mode = "habitat2020";
  std::string visibility = "oracle";
  std::string agent = "oracle";
  std::uint64_t agent_seed = 0;
  int max_steps = 500;
  double r_success = 1.0;
  std::string out = "eval-out";
  bool serve = false;
  int port = 0;
  bool force = false;
  std::string label = "minival";
  std::optional<std::uint64_t> shuffle_seed;
  std::vector<std::string> sensors{"gps_compass", "depth_scan"};
  int timeout_s = 60;
};

AgentFactory agent_factory(const std::string& name, std::uint64_t seed, double tolerance) {
  if (name == "stop") return [] { return std::make_unique<StopAgent>(); };
  if (name == "random") return [seed] { return std::make_unique<RandomAgent>(seed); };
  if (name == "bump") return [] { return std::make_unique<BumpAgent>(); };
  return [tolerance] { return std::make_unique<OracleAgent>(tolerance); };
}

int cmd_eval(const EvalArgs& a, int jobs, const CLI::App* sub) {
  ensure_dir(a.out);
  Dataset merged;
  std::vector<GenerationProfile> profiles;
  Manifest m(a.serve ? "eval --serve" : "eval", sub);
  for (const auto& path : a.datasets) {
    auto in = open_in(path);
    Dataset ds = read_dataset(in);
    profiles.push_back(ds.header.profile);
    if (merged.episodes.empty()) merged.header = ds.header;
    std::move(ds.episodes.begin(), ds.episodes.end(), std::back_inserter(merged.episodes));
    m.input(path);
  }
  check_profiles_comparable(profiles, a.force, &std::cerr);
  const SceneMap scenes = load_scene_dir(a.scenes);
  add_scene_inputs(m, a.scenes);
  if (merged.episodes.empty()) throw Error("the dataset holds no episodes");

  RunConfig cfg;
  cfg.eval.success_mode = parse_success_mode(a.mode);
  cfg.eval.visibility_mode = parse_visibility_mode(a.visibility);
  cfg.eval.max_steps = a.max_steps;
  cfg.eval.r_success = a.r_success;
  cfg.shuffle_seed = a.shuffle_seed;
  cfg.jobs = jobs;
  cfg.grant.gps_compass = std::find(a.sensors.begin(), a.sensors.end(), "gps_compass") != a.sensors.end();
  cfg.grant.depth = std::find(a.sensors.begin(), a.sensors.end(), "depth_scan") != a.sensors.end();
  if (a.shuffle_seed) m.seed("shuffle_seed", *a.shuffle_seed);

  MetricsReport report;
  if (a.serve) {
    SessionConfig sc;
    sc.run = cfg;
    sc.port = static_cast<std::uint16_t>(a.port);
    sc.label = a.label;
    sc.action_timeout = std::chrono::seconds(a.timeout_s);
    const SessionRecord rec = serve(merged, scenes, sc, [](std::uint16_t port) {
      std::cout << "listening on 127.0.0.1:" << port << std::endl;
    });
    const fs::path session_file = fs::path(a.out) / "session.json";
    {
      auto out = open_out(session_file);
      write_session_record(out, rec);
    }
    m.output(session_file);
    if (!rec.report) throw Error("session ended before any episode ran");
    report = *rec.report;
  } else {
    m.seed("agent_seed", a.agent_seed);
    report = run_local(merged, scenes, agent_factory(a.agent, a.agent_seed, cfg.eval.viewpoint_geodesic_tolerance), cfg);
  }

  const fs::path json_file = fs::path(a.out) / "metrics.json";
  const fs::path csv_file = fs::path(a.out) / "metrics.csv";
  {
    auto out = open_out(json_file);
    write_report_json(out, report);
  }
  {
    auto out = open_out(csv_file);
    write_report_csv(out, report);
  }
  m.output(json_file);
  m.output(csv_file);
  m.write(fs::path(a.out) / "manifest.json");
  std::printf("N %zu  spl %.6f  success_rate %.6f  mean_final_geodesic %.6f\n", report.n, report.spl,
              report.success_rate, report.mean_final_geodesic);
  return 0;
}

struct DiagArgs {
  double prob = 0.5;
  double c = 0.8;
  int n = 100;
  std::int64_t trials = 100'000;
  std::uint64_t seed = 0;
  int turn_pairs = 50;
  bool panorama = true;
};

int cmd_diagnostics(const DiagArgs& a) {
  const VarianceDiagnostic v = variance_diagnostic(a.c, a.prob, a.n, a.trials, a.seed);
  std::printf("variance diagnostic (c=%.4f, prob=%.4f, N=%d, trials=%lld)\n", a.c, a.prob, a.n,
              static_cast<long long>(a.trials));
  std::printf("  %-32s %.6f\n", "empirical var(SPL_i)", v.empirical_var);
  std::printf("  %-32s %.6f\n", "c^2 p (1-p)", v.bernoulli_var);
  std::printf("  %-32s %.6f\n", "p (1-p) mean(SPL)^2", v.mean_scaled_var);
  std::printf("  %-32s %.6f\n", "empirical mean(SPL_i)", v.empirical_mean);
  if (v.bernoulli_var > 0)
    std::printf("  %-32s %.4f%%\n", "relative error vs c^2 p (1-p)",
                100.0 * std::abs(v.empirical_var - v.bernoulli_var) / v.bernoulli_var);

  // Turning check on a small generated scene, driven by the oracle's own action sequence.
  SceneParams sp;
  sp.width = 10.0;
  sp.height = 10.0;
  sp.room_count = 3;
  sp.objects_min = 0;
  sp.objects_max = 1;
  sp.seed = a.seed;
  const Scene scene = generate_scene(sp);
  EpisodeGenConfig gen;
  gen.count_per_scene = 1;
  gen.seed = a.seed;
  const std::vector<Scene> scenes{scene};
  const Episode ep = generate_episodes(scenes, gen).front();
  RunConfig cfg;
  cfg.eval.max_steps = 2000;
  const NavGrid grid = build_navgrid(scene, cfg.eval.agent.radius);
  OracleAgent oracle(cfg.eval.viewpoint_geodesic_tolerance);
  std::vector<Action> actions;
  run_episode(scene, grid, ep, oracle, 0, cfg, &actions);
  if (actions.empty() || actions.back() != Action::Stop) actions.push_back(Action::Stop);
  const GeodesicField zone = viewpoint_field(grid, ep.viewpoint_positions());
  const auto make_sim = [&] { return reset(scene, ep, cfg.eval.agent, cfg.eval.sensor, cfg.eval.max_steps).first; };
  const auto success = [&](const Simulator& sim) {
    return evaluate_success(scene, grid, zone, ep, sim.state(), cfg.eval).success;
  };
  const TurningCheck t = turning_invariance_check(make_sim, actions, a.turn_pairs, a.panorama, success, ep.info.geodesic);
  std::printf("turning invariance (%d turn pairs%s, episode %s)\n", a.turn_pairs, a.panorama ? ", panorama prefix" : "",
              ep.episode_id.c_str());
  std::printf("  p_base %.6f  p_turned %.6f  %s\n", t.p_base, t.p_turned, t.p_base == t.p_turned ? "equal" : "DIFFERENT");
  std::printf("  spl_base %.6f  spl_turned %.6f  %s\n", t.spl_base, t.spl_turned,
              t.spl_base == t.spl_turned ? "equal" : "DIFFERENT");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ObjectNav scene, dataset and evaluation tool"};
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();
  app.set_version_flag("--version", kToolVersion);
  std::string config_path;
  int jobs = 1;
  app.add_option("--config", config_path, "JSON file of flag values (flags take precedence)");
  app.add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);

  auto* scene = app.add_subcommand("scene", "Generate or validate scenes")->require_subcommand(1);
  SceneGenArgs sg;
  auto* scene_gen = scene->add_subcommand("gen", "Generate scene files");
  scene_gen->add_option("--out", sg.out, "Output directory")->required();
  scene_gen->add_option("--count", sg.count, "Number of scenes")->check(CLI::PositiveNumber);
  scene_gen->add_option("--seed", sg.seed, "Seed")->envname("OBJNAV_SEED");
  scene_gen->add_option("--width", sg.width, "Width in meters")->check(CLI::PositiveNumber);
  scene_gen->add_option("--height", sg.height, "Height in meters")->check(CLI::PositiveNumber);
  scene_gen->add_option("--rooms", sg.rooms, "Room count")->check(CLI::PositiveNumber);
  scene_gen->add_option("--cell-size", sg.cell_size, "Occupancy cell size in meters")->check(CLI::PositiveNumber);
  scene_gen->add_option("--objects-min", sg.objects_min, "Minimum instances per category")->check(CLI::NonNegativeNumber);
  scene_gen->add_option("--objects-max", sg.objects_max, "Maximum instances per category")->check(CLI::NonNegativeNumber);
  scene_gen->add_option("--categories", sg.categories, "JSON table of category shapes")->check(CLI::ExistingFile);

  std::vector<std::string> validate_paths;
  auto* scene_validate = scene->add_subcommand("validate", "Check scene files against the scene invariants");
  scene_validate->add_option("paths", validate_paths, "Scene files or directories")->required();

  auto* episodes = app.add_subcommand("episodes", "Build or summarize episode datasets")->require_subcommand(1);
  EpisodesGenArgs eg;
  auto* ep_gen = episodes->add_subcommand("gen", "Generate an episode dataset");
  ep_gen->add_option("--scenes", eg.scenes, "Scene directory")->required()->check(CLI::ExistingDirectory);
  ep_gen->add_option("--profile", eg.profile, "Dataset profile")->check(CLI::IsMember({"habitat", "robothor"}));
  ep_gen->add_option("--count-per-scene", eg.count_per_scene, "Episodes per scene")->check(CLI::PositiveNumber);
  ep_gen->add_option("--r-success", eg.r_success, "Success radius in meters")->check(CLI::PositiveNumber);
  ep_gen->add_option("--seed", eg.seed, "Seed")->envname("OBJNAV_SEED");
  ep_gen->add_option("--out", eg.out, "Output dataset file")->required();

  std::string stats_dataset;
  std::string stats_out;
  auto* ep_stats = episodes->add_subcommand("stats", "Distribution statistics of a dataset as CSV");
  ep_stats->add_option("--dataset", stats_dataset, "Dataset file")->required()->check(CLI::ExistingFile);
  ep_stats->add_option("--out", stats_out, "Output CSV file")->required();

  EvalArgs ev;
  auto* eval = app.add_subcommand("eval", "Evaluate an agent on a dataset");
  eval->add_option("--dataset", ev.datasets, "Dataset file (repeatable)")->required()->check(CLI::ExistingFile);
  eval->add_option("--scenes", ev.scenes, "Scene directory")->required()->check(CLI::ExistingDirectory);
  eval->add_option("--mode", ev.mode, "Success criterion")->check(CLI::IsMember({"habitat2020", "general"}));
  eval->add_option("--visibility", ev.visibility, "Visibility test in general mode")
      ->check(CLI::IsMember({"oracle", "in_view"}));
  eval->add_option("--agent", ev.agent, "Built-in agent")->check(CLI::IsMember({"oracle", "random", "stop", "bump"}));
  eval->add_option("--agent-seed", ev.agent_seed, "Seed of the random agent")->envname("OBJNAV_SEED");
  eval->add_option("--max-steps", ev.max_steps, "Step budget per episode")->check(CLI::PositiveNumber);
  eval->add_option("--r-success", ev.r_success, "Success radius for general mode")->check(CLI::PositiveNumber);
  eval->add_option("--out", ev.out, "Output directory");
  eval->add_flag("--serve", ev.serve, "Serve the wire protocol instead of running a built-in agent");
  eval->add_option("--port", ev.port, "Port for --serve (0 picks one)")->check(CLI::Range(0, 65535));
  eval->add_flag("--force", ev.force, "Pool datasets from different profiles");
  eval->add_option("--label", ev.label, "Run label")->check(CLI::IsMember({"minival", "test-standard", "test-challenge"}));
  eval->add_option("--shuffle-seed", ev.shuffle_seed, "Shuffle episode order");
  eval->add_option("--sensors", ev.sensors, "Granted sensors")->check(CLI::IsMember({"gps_compass", "depth_scan"}));
  eval->add_option("--timeout", ev.timeout_s, "Per-action timeout in seconds for --serve")->check(CLI::PositiveNumber);

  DiagArgs dg;
  auto* diag = app.add_subcommand("diagnostics", "SPL variance and turning-invariance diagnostics");
  diag->add_option("--prob", dg.prob, "Success probability")->check(CLI::Range(0.0, 1.0));
  diag->add_option("--c", dg.c, "SPL of a successful episode")->check(CLI::Range(0.0, 1.0));
  diag->add_option("--n", dg.n, "Episodes per trial")->check(CLI::PositiveNumber);
  diag->add_option("--trials", dg.trials, "Trials")->check(CLI::Range(std::int64_t{10'000}, std::int64_t{100'000'000}));
  diag->add_option("--seed", dg.seed, "Seed")->envname("OBJNAV_SEED");
  diag->add_option("--turn-pairs", dg.turn_pairs, "Inserted LEFT/RIGHT pairs")->check(CLI::NonNegativeNumber);
  diag->add_flag("!--no-panorama", dg.panorama, "Skip the 12-turn panorama prefix");

  try {
    ConfigFile config;
    for (int i = 1; i < argc; ++i) {
      const std::string arg = argv[i];
      if (arg == "--config" && i + 1 < argc) config.load(argv[i + 1]);
      if (arg.rfind("--config=", 0) == 0) config.load(arg.substr(9));
    }
    for (CLI::App* sub : {scene_gen, ep_gen, ep_stats, eval, diag}) config.apply(sub);
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  }

  try {
    if (scene_gen->parsed()) return cmd_scene_gen(sg, scene_gen);
    if (scene_validate->parsed()) return cmd_scene_validate(validate_paths);
    if (ep_gen->parsed()) return cmd_episodes_gen(eg, jobs, ep_gen);
    if (ep_stats->parsed()) return cmd_episodes_stats(stats_dataset, stats_out, ep_stats);
    if (eval->parsed()) return cmd_eval(ev, jobs, eval);
    if (diag->parsed()) return cmd_diagnostics(dg);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

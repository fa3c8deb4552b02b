#include "objnav/episodes.hpp"

#include <algorithm>
#include <cstdio>
#include <exception>
#include <istream>
#include <mutex>
#include <numeric>
#include <ostream>
#include <sstream>
#include <thread>

#include "nlohmann/json.hpp"
#include "objnav/random.hpp"

namespace objnav {

double quantized_heading(int k, double turn_deg) { return wrap_angle(k * deg_to_rad(turn_deg)); }

std::optional<int> heading_quantum(double heading, double turn_deg, double tol) {
  const int n = static_cast<int>(std::lround(360.0 / turn_deg));
  for (int k = 0; k < n; ++k)
    if (std::abs(wrap_angle(heading - quantized_heading(k, turn_deg))) <= tol) return k;
  return std::nullopt;
}

Difficulty difficulty_bin(double geodesic, const GenerationProfile& profile) {
  if (!(geodesic >= profile.geodesic_min && geodesic <= profile.geodesic_max))
    throw ArgumentError("geodesic distance " + std::to_string(geodesic) + " is outside the '" + profile.name +
                        "' range");
  if (geodesic < profile.edge_easy) return Difficulty::Easy;
  if (geodesic < profile.edge_hard) return Difficulty::Medium;
  return Difficulty::Hard;
}

// ---------------------------------------------------------------------------
// GoalIndex

GoalIndex::GoalIndex(const Scene& scene, std::shared_ptr<const NavGrid> grid, double r_success,
                     const VisibilityConfig& vis)
    : scene_(&scene), grid_(std::move(grid)), r_success_(r_success) {
  for (const auto& o : scene.objects())
    viewpoints_.emplace(o.instance_id, compute_viewpoints(scene, *grid_, o, r_success, vis));
}

const std::vector<Viewpoint>& GoalIndex::viewpoints(const std::string& instance_id) const {
  const auto it = viewpoints_.find(instance_id);
  if (it == viewpoints_.end()) throw ArgumentError("unknown instance '" + instance_id + "'");
  return it->second;
}

std::vector<std::string> GoalIndex::valid_instances(const std::string& category) const {
  std::vector<std::string> out;
  for (const auto* o : scene_->objects_of(category))
    if (!viewpoints(o->instance_id).empty()) out.push_back(o->instance_id);
  return out;
}

std::vector<std::string> GoalIndex::valid_categories() const {
  std::vector<std::string> out;
  for (const auto& c : scene_->categories())
    if (!valid_instances(c).empty()) out.push_back(c);
  return out;
}

GeodesicField viewpoint_field(const NavGrid& grid, std::span<const Vec2> viewpoints) {
  return geodesic_field(grid, snap_targets(grid, viewpoints));
}

namespace {

std::vector<Vec2> positions_of(const std::vector<Viewpoint>& vps) {
  std::vector<Vec2> out;
  out.reserve(vps.size());
  for (const auto& v : vps) out.push_back(v.position);
  return out;
}

}  // namespace

const GeodesicField& GoalIndex::category_field(const std::string& category) {
  if (auto it = category_fields_.find(category); it != category_fields_.end()) return it->second;
  std::vector<Vec2> points;
  for (const auto& id : valid_instances(category)) {
    const auto p = positions_of(viewpoints(id));
    points.insert(points.end(), p.begin(), p.end());
  }
  if (points.empty()) throw ArgumentError("category '" + category + "' has no viewpoints");
  return category_fields_.emplace(category, viewpoint_field(*grid_, points)).first->second;
}

const GeodesicField& GoalIndex::instance_field(const std::string& instance_id) {
  if (auto it = instance_fields_.find(instance_id); it != instance_fields_.end()) return it->second;
  const auto points = positions_of(viewpoints(instance_id));
  if (points.empty()) throw ArgumentError("instance '" + instance_id + "' has no viewpoints");
  return instance_fields_.emplace(instance_id, viewpoint_field(*grid_, points)).first->second;
}

// ---------------------------------------------------------------------------
// Generation

namespace {

std::string dominant_of(const std::map<std::string, std::int64_t>& rejections) {
  std::string best;
  std::int64_t best_n = -1;
  for (const auto& [name, n] : rejections)
    if (n > best_n) {
      best = name;
      best_n = n;
    }
  return best;
}

std::string describe_failure(const std::string& scene_id, std::int64_t draws, std::int64_t accepted,
                             const std::map<std::string, std::int64_t>& rejections) {
  std::ostringstream msg;
  msg << "episode generation for scene '" << scene_id << "' accepted " << accepted << " of " << draws
      << " draws; dominant rejection filter: " << dominant_of(rejections) << " (";
  bool first = true;
  for (const auto& [name, n] : rejections) {
    msg << (first ? "" : ", ") << name << "=" << n;
    first = false;
  }
  msg << ")";
  return msg.str();
}

std::string episode_id_for(const std::string& scene_id, int index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%05d", index);
  return scene_id + "_" + buf;
}

std::vector<Episode> generate_for_scene(const Scene& scene, std::size_t scene_index, const EpisodeGenConfig& cfg) {
  auto grid = std::make_shared<const NavGrid>(build_navgrid(scene, cfg.agent.radius));
  GoalIndex goals(scene, grid, cfg.r_success, cfg.visibility);
  const auto categories = goals.valid_categories();
  if (categories.empty())
    throw GenerationError(scene.id(), 0, 0, {{"no_valid_category", 1}});

  std::vector<Cell> free_cells;
  for (std::size_t i = 0; i < grid->size(); ++i) {
    const Cell c = grid->cell_at(i);
    if (grid->free(c)) free_cells.push_back(c);
  }

  Rng rng(derive_seed(cfg.seed, scene_index));
  const GenerationProfile& profile = cfg.profile;
  const ActionQuanta quanta{cfg.agent.step, cfg.agent.turn_deg};
  const int headings = static_cast<int>(std::lround(360.0 / cfg.agent.turn_deg));
  const double cs = grid->cell_size();

  std::map<std::string, std::int64_t> rejections;
  std::vector<Episode> out;
  std::int64_t draws = 0;
  while (static_cast<int>(out.size()) < cfg.count_per_scene) {
    if (draws >= cfg.draw_budget ||
        (draws >= cfg.min_draws_for_rate_check &&
         static_cast<double>(out.size()) / static_cast<double>(draws) < cfg.min_acceptance_rate))
      throw GenerationError(scene.id(), draws, static_cast<std::int64_t>(out.size()), rejections);
    ++draws;

    const Cell cell = free_cells[uniform_index(rng, free_cells.size())];
    const Vec2 start{round6((cell.col + uniform01(rng)) * cs), round6((cell.row + uniform01(rng)) * cs)};
    const int heading_k = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(headings)));
    const std::string& category = categories[uniform_index(rng, categories.size())];

    if (!grid->navigable(start) || !grid->snap(start)) {
      ++rejections["start_navigable"];
      continue;
    }
    const GeodesicField& field = goals.category_field(category);
    const double geodesic = round6(field.at(*grid, start));
    if (geodesic == kInfinity) {
      ++rejections["reachable"];
      continue;
    }
    if (geodesic < profile.geodesic_min || geodesic > profile.geodesic_max) {
      ++rejections["geodesic_range"];
      continue;
    }

    std::map<std::string, std::vector<Viewpoint>> viewpoints;
    double euclidean = kInfinity;
    for (const auto& id : goals.valid_instances(category)) {
      const auto& vps = goals.viewpoints(id);
      for (const auto& v : vps) euclidean = std::min(euclidean, distance(start, v.position));
      viewpoints.emplace(id, vps);
    }
    euclidean = round6(euclidean);
    const double ratio = euclidean > 0 ? round6(geodesic / euclidean) : kInfinity;
    if (!(ratio >= profile.min_ratio)) {
      ++rejections["min_ratio"];
      continue;
    }

    const double heading = quantized_heading(heading_k, cfg.agent.turn_deg);
    const auto path = path_from_field(*grid, field, *grid->snap(start));
    const int actions = action_path_length(path, quanta, heading);
    if (actions > profile.max_action_count) {
      ++rejections["max_action_count"];
      continue;
    }

    Episode ep;
    ep.episode_id = episode_id_for(scene.id(), static_cast<int>(out.size()));
    ep.scene_id = scene.id();
    ep.start = {start, heading};
    ep.goal_category = category;
    ep.info.euclidean = euclidean;
    ep.info.geodesic = geodesic;
    ep.info.ratio = ratio;
    ep.info.shortest_action_count = actions;
    ep.info.difficulty = difficulty_bin(geodesic, profile);
    for (const auto& [id, vps] : viewpoints)
      ep.info.per_instance_geodesic[id] = round6(goals.instance_field(id).at(*grid, start));
    ep.viewpoints = std::move(viewpoints);
    out.push_back(std::move(ep));
  }
  return out;
}

}  // namespace

GenerationError::GenerationError(const std::string& scene_id, std::int64_t draws, std::int64_t accepted,
                                 std::map<std::string, std::int64_t> rejections)
    : Error(describe_failure(scene_id, draws, accepted, rejections)), rejections_(std::move(rejections)),
      dominant_(dominant_of(rejections_)) {}

std::vector<Episode> generate_episodes(std::span<const Scene> scenes, const EpisodeGenConfig& config) {
  config.profile.validate();
  config.visibility.validate();
  config.agent.validate();
  if (config.count_per_scene < 0) throw ArgumentError("count_per_scene must be >= 0");
  if (!(config.r_success > 0)) throw ArgumentError("r_success must be positive");

  std::vector<std::vector<Episode>> per_scene(scenes.size());
  std::vector<std::exception_ptr> errors(scenes.size());
  const std::size_t jobs = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(config.jobs, 1)), 1,
                                                   std::max<std::size_t>(scenes.size(), 1));
  std::size_t next = 0;
  std::mutex mu;
  auto worker = [&] {
    for (;;) {
      std::size_t i;
      {
        std::lock_guard lock(mu);
        if (next >= scenes.size()) return;
        i = next++;
      }
      try {
        per_scene[i] = generate_for_scene(scenes[i], i, config);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  std::vector<Episode> out;
  for (auto& v : per_scene) std::move(v.begin(), v.end(), std::back_inserter(out));
  return out;
}

void validate_episode(const Episode& ep, const GenerationProfile& profile) {
  auto fail = [&](const std::string& filter, const std::string& detail) {
    throw ValidationError(filter, "episode '" + ep.episode_id + "': " + detail);
  };
  if (ep.episode_id.empty()) fail("episode_id", "empty episode id");
  if (!(ep.info.ratio >= profile.min_ratio))
    fail("min_ratio", "ratio " + std::to_string(ep.info.ratio) + " below " + std::to_string(profile.min_ratio));
  if (ep.info.shortest_action_count > profile.max_action_count)
    fail("max_action_count", std::to_string(ep.info.shortest_action_count) + " actions exceed " +
                                 std::to_string(profile.max_action_count));
  if (!(ep.info.geodesic >= profile.geodesic_min && ep.info.geodesic <= profile.geodesic_max))
    fail("geodesic_range", "geodesic " + std::to_string(ep.info.geodesic) + " outside the profile range");
  if (!heading_quantum(ep.start.heading)) fail("heading", "start heading is not a multiple of 30 degrees");
  bool any = false;
  for (const auto& [id, vps] : ep.viewpoints) {
    any = any || !vps.empty();
    for (const auto& v : vps)
      if (v.instance_id != id) fail("viewpoints", "viewpoint filed under the wrong instance");
  }
  if (!any) fail("viewpoints", "no goal instance has a viewpoint");
  if (difficulty_bin(ep.info.geodesic, profile) != ep.info.difficulty)
    fail("difficulty", "difficulty does not match the profile edges");
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

using ojson = nlohmann::ordered_json;

ojson profile_to_json(const GenerationProfile& p) {
  ojson j;
  j["name"] = p.name;
  j["geodesic_range"] = {round6(p.geodesic_min), round6(p.geodesic_max)};
  j["max_action_count"] = p.max_action_count;
  j["min_ratio"] = round6(p.min_ratio);
  j["difficulty_edges"] = {round6(p.edge_easy), round6(p.edge_hard)};
  return j;
}

GenerationProfile profile_from_json(const nlohmann::json& j) {
  GenerationProfile p;
  p.name = j.at("name").get<std::string>();
  p.geodesic_min = j.at("geodesic_range").at(0).get<double>();
  p.geodesic_max = j.at("geodesic_range").at(1).get<double>();
  p.max_action_count = j.at("max_action_count").get<int>();
  p.min_ratio = j.at("min_ratio").get<double>();
  p.edge_easy = j.at("difficulty_edges").at(0).get<double>();
  p.edge_hard = j.at("difficulty_edges").at(1).get<double>();
  p.validate();
  return p;
}

nlohmann::json parse_line(std::string_view line, std::size_t offset) {
  try {
    return nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("dataset: ") + e.what(), offset + e.byte);
  }
}

}  // namespace

std::string episode_to_json(const Episode& ep) {
  ojson j;
  j["episode_id"] = ep.episode_id;
  j["scene_id"] = ep.scene_id;
  j["start"]["position"] = {round6(ep.start.position.x), round6(ep.start.position.y)};
  j["start"]["heading"] = round6(ep.start.heading);
  j["goal_category"] = ep.goal_category;
  auto& info = j["info"];
  info["euclidean"] = round6(ep.info.euclidean);
  info["geodesic"] = round6(ep.info.geodesic);
  info["ratio"] = round6(ep.info.ratio);
  info["shortest_action_count"] = ep.info.shortest_action_count;
  info["difficulty"] = to_string(ep.info.difficulty);
  info["per_instance_geodesic"] = ojson::object();
  for (const auto& [id, g] : ep.info.per_instance_geodesic) {
    if (std::isfinite(g)) {
      info["per_instance_geodesic"][id] = round6(g);
    } else {
      info["per_instance_geodesic"][id] = nullptr;
    }
  }
  j["viewpoints"] = ojson::object();
  for (const auto& [id, vps] : ep.viewpoints) {
    auto arr = ojson::array();
    for (const auto& v : vps)
      arr.push_back({round6(v.position.x), round6(v.position.y), round6(v.distance_to_surface)});
    j["viewpoints"][id] = std::move(arr);
  }
  return j.dump();
}

Episode episode_from_json(std::string_view line) {
  const nlohmann::json j = parse_line(line, 0);
  Episode ep;
  try {
    ep.episode_id = j.at("episode_id").get<std::string>();
    ep.scene_id = j.at("scene_id").get<std::string>();
    const auto& start = j.at("start");
    ep.start.position = {start.at("position").at(0).get<double>(), start.at("position").at(1).get<double>()};
    const double heading = start.at("heading").get<double>();
    const auto k = heading_quantum(heading);
    if (!k)
      throw ValidationError("heading", "episode '" + ep.episode_id + "': start heading is not a multiple of 30 degrees");
    ep.start.heading = quantized_heading(*k);
    ep.goal_category = j.at("goal_category").get<std::string>();
    const auto& info = j.at("info");
    ep.info.euclidean = info.at("euclidean").get<double>();
    ep.info.geodesic = info.at("geodesic").get<double>();
    ep.info.ratio = info.at("ratio").get<double>();
    ep.info.shortest_action_count = info.at("shortest_action_count").get<int>();
    ep.info.difficulty = parse_difficulty(info.at("difficulty").get<std::string>());
    if (info.contains("per_instance_geodesic")) {
      for (const auto& [id, g] : info.at("per_instance_geodesic").items())
        ep.info.per_instance_geodesic[id] = g.is_null() ? kInfinity : g.get<double>();
    }
    for (const auto& [id, arr] : j.at("viewpoints").items()) {
      auto& vps = ep.viewpoints[id];
      for (const auto& v : arr) vps.push_back({{v.at(0).get<double>(), v.at(1).get<double>()}, id, v.at(2).get<double>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("schema", "episode '" + ep.episode_id + "': " + e.what());
  }
  return ep;
}

void write_dataset(std::ostream& out, const DatasetHeader& header, std::span<const Episode> episodes) {
  ojson h;
  h["schema_version"] = "1";
  h["profile"] = profile_to_json(header.profile);
  h["r_success"] = round6(header.r_success);
  h["seed"] = header.seed;
  out << h.dump() << '\n';
  for (const auto& ep : episodes) out << episode_to_json(ep) << '\n';
}

DatasetReader::DatasetReader(std::istream& in) : in_(&in) {
  std::string line;
  if (!std::getline(*in_, line)) throw ParseError("dataset: missing header line", 0);
  line_ = 1;
  const nlohmann::json h = parse_line(line, 0);
  offset_ = line.size() + 1;
  try {
    if (h.at("schema_version").get<std::string>() != "1")
      throw ValidationError("schema_version", "unsupported dataset schema version");
    header_.profile = profile_from_json(h.at("profile"));
    header_.r_success = h.at("r_success").get<double>();
    header_.seed = h.at("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("schema", std::string("dataset header: ") + e.what());
  }
}

std::optional<Episode> DatasetReader::next() {
  std::string line;
  while (std::getline(*in_, line)) {
    ++line_;
    const std::size_t at = offset_;
    offset_ += line.size() + 1;
    if (line.empty()) continue;
    Episode ep;
    try {
      ep = episode_from_json(line);
    } catch (const ParseError& e) {
      throw ParseError("dataset line " + std::to_string(line_) + ": " + e.what(), at + e.position());
    }
    validate_episode(ep, header_.profile);
    return ep;
  }
  return std::nullopt;
}

Dataset read_dataset(std::istream& in) {
  DatasetReader reader(in);
  Dataset ds{reader.header(), {}};
  while (auto ep = reader.next()) ds.episodes.push_back(std::move(*ep));
  return ds;
}

// ---------------------------------------------------------------------------
// Statistics

const MetricSummary& StatsReport::metric(std::string_view name) const {
  for (const auto& m : metrics)
    if (m.metric == name) return m;
  throw ArgumentError("no metric named '" + std::string(name) + "'");
}

namespace {

MetricSummary summarize(std::string name, std::vector<double> values) {
  MetricSummary s;
  s.metric = std::move(name);
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  s.min = values.front();
  s.max = values.back();
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(n);
  s.median = n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
  const double width = (s.max - s.min) / kHistogramBins;
  s.bins.resize(kHistogramBins);
  for (int b = 0; b < kHistogramBins; ++b) {
    s.bins[b].lo = s.min + b * width;
    s.bins[b].hi = b + 1 == kHistogramBins ? s.max : s.min + (b + 1) * width;
  }
  for (double v : values) {
    int b = width > 0 ? static_cast<int>((v - s.min) / width) : 0;
    b = std::clamp(b, 0, kHistogramBins - 1);
    ++s.bins[b].count;
  }
  return s;
}

}  // namespace

StatsReport dataset_stats(std::span<const Episode> episodes) {
  if (episodes.empty()) throw ArgumentError("cannot compute statistics of an empty dataset");
  StatsReport r;
  r.episode_count = episodes.size();
  std::vector<double> euc, geo, ratio;
  for (const auto& ep : episodes) {
    euc.push_back(ep.info.euclidean);
    geo.push_back(ep.info.geodesic);
    ratio.push_back(ep.info.ratio);
    ++r.per_category[ep.goal_category];
    ++r.per_difficulty[std::string(to_string(ep.info.difficulty))];
  }
  r.metrics.push_back(summarize("euclidean", std::move(euc)));
  r.metrics.push_back(summarize("geodesic", std::move(geo)));
  r.metrics.push_back(summarize("ratio", std::move(ratio)));
  return r;
}

void write_stats_csv(std::ostream& out, const StatsReport& report) {
  auto num = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return std::string(buf);
  };
  out << "metric,bin_lo,bin_hi,count\n";
  for (const auto& m : report.metrics)
    for (const auto& b : m.bins) out << m.metric << ',' << num(b.lo) << ',' << num(b.hi) << ',' << b.count << '\n';
  out << "\nsummary,min,max,mean,median\n";
  for (const auto& m : report.metrics)
    out << m.metric << ',' << num(m.min) << ',' << num(m.max) << ',' << num(m.mean) << ',' << num(m.median) << '\n';
  out << "\ngroup,key,count\n";
  out << "all,episodes," << report.episode_count << '\n';
  for (const auto& [k, n] : report.per_category) out << "category," << k << ',' << n << '\n';
  for (const auto& [k, n] : report.per_difficulty) out << "difficulty," << k << ',' << n << '\n';
}

}  // namespace objnav

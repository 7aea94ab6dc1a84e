#include "dcbf/harness.hpp"

#include "dcbf/data.hpp"
#include "dcbf/serialize.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace dcbf {

void EpisodeConfig::validate() const {
  if (step_cap < 1 || stall_limit < 1 || history_len < 1) throw ConfigError("episode: caps must be positive");
  if (!(threshold_deg > 0.0) || !(goal_tolerance > 0.0)) throw ConfigError("episode: thresholds must be positive");
}

GoalSpec episode_goal(const World& world, std::uint64_t seed, double tolerance) {
  WorldRng rng(derive_seed(seed, 0x676f616cULL));
  return sample_goal(world, world.config().ee_start, tolerance, rng);
}

EpisodeResult run_episode(World world, const Controller& ctl, const GoalSpec& goal, const EpisodeConfig& cfg) {
  cfg.validate();
  EpisodeResult res;
  res.seed = world.config().seed;
  HistoryTracker tracker(cfg.history_len, world);
  const WorldConfig& wc = world.config();
  auto note_tilts = [&] {
    for (const auto& o : world.objects()) {
      res.max_tilt_deg = std::max(res.max_tilt_deg, tilt_deg(o));
      if (is_violation(o, cfg.threshold_deg)) res.violated = true;
    }
  };
  note_tilts();

  int stays = 0;
  while (res.steps_used < cfg.step_cap) {
    if (goal.reached(world.robot().pos)) break;
    Action u = nominal_action(ctl.kind, tracker, goal, ctl.policy, wc);
    if (ctl.net) {
      FilterResult f = filter(*ctl.net, tracker, u, ctl.filter, wc);
      u = f.action;
      res.evaluations += f.report.evaluations;
      if (cfg.keep_reports) res.reports.push_back(f.report.to_text());
    }
    stays = u == Action::stay() ? stays + 1 : 0;
    if (stays >= cfg.stall_limit) {
      res.stalled = true;
      break;
    }
    world.step(u);
    tracker.record(world);
    ++res.steps_used;
    note_tilts();
  }
  res.reached = goal.reached(world.robot().pos);
  res.final_distance = (world.robot().pos - goal.pos).norm();
  return res;
}

EpisodeResult run_episode(const WorldConfig& world, const Controller& ctl, std::uint64_t seed,
                          const EpisodeConfig& cfg) {
  World w = World::spawn(world, seed);
  const GoalSpec goal = episode_goal(w, seed, cfg.goal_tolerance);
  return run_episode(std::move(w), ctl, goal, cfg);
}

PolicySpec parse_policy_spec(const std::string& text) {
  PolicySpec spec;
  spec.label = text;
  const auto open = text.find('(');
  if (open == std::string::npos) {
    spec.kind = policy_from_name(text);
    if (spec.kind == PolicyKind::Dcbf) throw ConfigError("dcbf policy needs a checkpoint: dcbf(path)");
    return spec;
  }
  if (text.back() != ')' || text.substr(0, open) != "dcbf") throw ConfigError("bad policy spec: " + text);
  spec.kind = PolicyKind::Dcbf;
  spec.checkpoint = text.substr(open + 1, text.size() - open - 2);
  if (spec.checkpoint.empty()) throw ConfigError("dcbf policy needs a checkpoint: dcbf(path)");
  return spec;
}

void ExperimentConfig::validate() const {
  if (object_counts.empty() || episodes < 1) throw ConfigError("experiment: need object counts and episodes >= 1");
  for (int n : object_counts) {
    if (n < 1) throw ConfigError("experiment: object counts must be >= 1");
  }
  episode.validate();
}

MetricsRow summarize(const std::string& policy, int n_objects, std::span<const EpisodeResult> episodes) {
  MetricsRow row;
  row.policy = policy;
  row.n_objects = n_objects;
  row.episodes = static_cast<int>(episodes.size());
  if (episodes.empty()) return row;
  double safe = 0, reach = 0, both = 0, dist = 0, tilt = 0;
  int violating = 0;
  for (const auto& e : episodes) {
    safe += e.violated ? 0 : 1;
    reach += e.reached ? 1 : 0;
    both += e.safe_and_success() ? 1 : 0;
    dist += e.final_distance;
    if (e.violated) {
      tilt += e.max_tilt_deg;
      ++violating;
    }
    row.evaluations += e.evaluations;
  }
  const double n = static_cast<double>(episodes.size());
  row.safe_rate = safe / n;
  row.reach_rate = reach / n;
  row.safe_success_rate = both / n;
  row.mean_final_distance = dist / n;
  if (violating > 0) row.mean_max_tilt_violating = tilt / violating;
  return row;
}

const MetricsRow& MetricsTable::at(const std::string& policy, int n_objects) const {
  for (const auto& r : rows) {
    if (r.policy == policy && r.n_objects == n_objects) return r;
  }
  throw ConfigError("no metrics row for " + policy + " at " + std::to_string(n_objects) + " objects");
}

MetricsTable run_experiment(const ExperimentConfig& cfg, const WorldConfig& world, const PolicyConfig& policy,
                            const FilterConfig& filter) {
  cfg.validate();
  std::vector<std::shared_ptr<const BarrierNet>> nets;
  for (const auto& p : cfg.policies) {
    if (p.kind == PolicyKind::Dcbf && !p.net) {
      nets.push_back(std::make_shared<const BarrierNet>(BarrierNet::load(p.checkpoint)));
    } else {
      nets.push_back(p.net);
    }
  }

  MetricsTable table;
  for (int n : cfg.object_counts) {
    WorldConfig wc = world;
    wc.n_objects = n;
    for (std::size_t p = 0; p < cfg.policies.size(); ++p) {
      Controller ctl;
      ctl.kind = cfg.policies[p].kind;
      ctl.policy = policy;
      ctl.filter = filter;
      ctl.net = ctl.kind == PolicyKind::Dcbf ? nets[p].get() : nullptr;
      std::vector<EpisodeResult> eps;
      eps.reserve(cfg.episodes);
      for (int e = 0; e < cfg.episodes; ++e) {
        const std::uint64_t seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(n) * 1000003ULL + e);
        eps.push_back(run_episode(wc, ctl, seed, cfg.episode));
      }
      table.rows.push_back(summarize(cfg.policies[p].label, n, eps));
    }
  }
  return table;
}

std::string table_to_csv(const MetricsTable& table) {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "policy,n_objects,episodes,safe_rate,reach_rate,safe_success_rate,mean_final_distance,"
        "mean_max_tilt_violating,evaluations\n";
  for (const auto& r : table.rows) {
    os << r.policy << ',' << r.n_objects << ',' << r.episodes << ',' << r.safe_rate << ',' << r.reach_rate << ','
       << r.safe_success_rate << ',' << r.mean_final_distance << ',';
    if (r.mean_max_tilt_violating) os << *r.mean_max_tilt_violating;
    os << ',' << r.evaluations << '\n';
  }
  return os.str();
}

std::string table_to_json(const MetricsTable& table) {
  Json rows = Json::array();
  for (const auto& r : table.rows) {
    rows.push_back(Json{{"policy", r.policy},
                        {"n_objects", r.n_objects},
                        {"episodes", r.episodes},
                        {"safe_rate", r.safe_rate},
                        {"reach_rate", r.reach_rate},
                        {"safe_success_rate", r.safe_success_rate},
                        {"mean_final_distance", r.mean_final_distance},
                        {"mean_max_tilt_violating",
                         r.mean_max_tilt_violating ? Json(*r.mean_max_tilt_violating) : Json(nullptr)},
                        {"evaluations", r.evaluations}});
  }
  return Json{{"rows", rows}}.dump(2) + "\n";
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  out << text;
  if (!out) throw IoError("failed writing " + path);
}

void export_table(const MetricsTable& table, const std::string& stem) {
  write_text_file(stem + ".csv", table_to_csv(table));
  write_text_file(stem + ".json", table_to_json(table));
}

Heatmap barrier_heatmap(const BarrierNet& net, const HistoryTracker& tracker, const WorldConfig& world,
                        int resolution) {
  if (resolution < 1) throw ConfigError("heatmap resolution must be at least 1");
  Heatmap h;
  h.resolution = resolution;
  h.hi = world.half_side() - world.ee_radius;
  h.lo = -h.hi;
  const double cell = (h.hi - h.lo) / resolution;
  std::vector<Vec2> points;
  points.reserve(static_cast<std::size_t>(resolution) * resolution);
  for (int iy = 0; iy < resolution; ++iy) {
    for (int ix = 0; ix < resolution; ++ix) {
      points.emplace_back(h.lo + (ix + 0.5) * cell, h.lo + (iy + 0.5) * cell);
    }
  }
  std::vector<int> live;
  for (int k = 0; k < tracker.object_count(); ++k) {
    if (!tracker.latest().objects[k].fallen) live.push_back(k);
  }
  const std::vector<double> v = global_values(net, tracker, live, points);
  h.values.resize(resolution, resolution);
  for (int iy = 0; iy < resolution; ++iy) {
    for (int ix = 0; ix < resolution; ++ix) h.values(iy, ix) = v[static_cast<std::size_t>(iy) * resolution + ix];
  }
  return h;
}

std::string Heatmap::to_csv() const {
  std::ostringstream os;
  os << std::setprecision(17) << "x,y,b_global\n";
  const double cell = (hi - lo) / resolution;
  for (int iy = 0; iy < resolution; ++iy) {
    for (int ix = 0; ix < resolution; ++ix) {
      os << lo + (ix + 0.5) * cell << ',' << lo + (iy + 0.5) * cell << ',' << values(iy, ix) << '\n';
    }
  }
  return os.str();
}

}  // namespace dcbf

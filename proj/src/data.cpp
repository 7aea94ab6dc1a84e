#include "dcbf/data.hpp"

#include <algorithm>

namespace dcbf {
namespace {

double segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 ab = b - a;
  const double len2 = ab.squaredNorm();
  const double s = len2 > 0.0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
  return (p - (a + s * ab)).norm();
}

ObjectHistory slice(const TransitionRecord& r, std::size_t first) {
  ObjectHistory h;
  h.object_id = r.object_id;
  const auto n = static_cast<std::size_t>(r.history_len()) + 1;
  h.entries.assign(r.object.begin() + first, r.object.begin() + first + n);
  return h;
}

}  // namespace

Label label(double next_object_tilt_deg, bool fallen, double threshold_deg) {
  return fallen || next_object_tilt_deg >= threshold_deg ? Label::Unsafe : Label::Safe;
}

Label label(const ObjectObservation& o, double threshold_deg) {
  return o.fallen || o.theta >= deg_to_rad(threshold_deg) ? Label::Unsafe : Label::Safe;
}

ObjectHistory TransitionRecord::current_history() const { return slice(*this, 0); }
ObjectHistory TransitionRecord::next_history() const { return slice(*this, 1); }

RelativeObservation TransitionRecord::current_obs() const {
  return to_object_frame(robot_current(), current_history(), history_len());
}

RelativeObservation TransitionRecord::next_obs() const {
  return to_object_frame(robot_next(), next_history(), history_len());
}

const SnapshotRef& TrajectoryLog::snapshot_at_or_before(std::uint64_t step) const {
  const SnapshotRef* best = nullptr;
  for (const auto& s : snapshots) {
    if (s.step <= step) best = &s;
  }
  if (!best) throw CorruptDataset("trajectory " + std::to_string(id) + " has no snapshot before step " +
                                  std::to_string(step));
  return *best;
}

void Dataset::refresh_counts() {
  manifest.n_safe = 0;
  manifest.n_unsafe = 0;
  for (const auto& r : records) (r.label == Label::Safe ? manifest.n_safe : manifest.n_unsafe)++;
  manifest.n_trajectories = trajectories.size();
}

const TrajectoryLog& Dataset::trajectory(std::uint64_t id) const {
  if (id >= trajectories.size() || trajectories[id].id != id) {
    throw CorruptDataset("unknown trajectory " + std::to_string(id));
  }
  return trajectories[id];
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return mix(mix(master) ^ stream);
}

GoalSpec sample_goal(const World& world, const Vec2& from, double tolerance, WorldRng& rng, int max_tries) {
  const WorldConfig& cfg = world.config();
  const double lim = cfg.half_side() - cfg.ee_radius - tolerance;
  const double x_lo = from.x() < 0.0 ? 0.0 : -lim;
  const double x_hi = from.x() < 0.0 ? lim : 0.0;
  const double clear = cfg.obj_radius + cfg.ee_radius + tolerance;
  const double brush = cfg.obj_radius + cfg.ee_radius;

  bool any_live = false;
  for (const auto& o : world.objects()) any_live = any_live || !o.fallen;

  std::optional<Vec2> fallback;
  Vec2 g = Vec2::Zero();
  for (int attempt = 0; attempt < max_tries; ++attempt) {
    g = Vec2(uniform(rng, x_lo, x_hi), uniform(rng, -lim, lim));
    bool free = true;
    bool touches = false;
    for (const auto& o : world.objects()) {
      if (o.fallen) continue;
      if ((g - o.pos).norm() <= clear) free = false;
      if (segment_distance(o.pos, from, g) <= brush) touches = true;
    }
    if (!free) continue;
    if (touches || !any_live) return GoalSpec{g, tolerance};
    if (!fallback) fallback = g;
  }
  return GoalSpec{fallback.value_or(g), tolerance};
}

void emit_records(std::uint64_t trajectory_id, std::span<const SceneFrame> frames, int history_len,
                  std::uint64_t first_step, std::uint64_t last_step, std::span<const SnapshotRef> snapshots,
                  std::vector<TransitionRecord>& out, double threshold_deg) {
  if (frames.size() < last_step + 1) throw ShapeMismatch("emit_records: missing frames");
  const int n_obj = frames.empty() ? 0 : static_cast<int>(frames[0].objects.size());
  const int span_len = history_len + 3;
  for (std::uint64_t t = first_step; t < last_step; ++t) {
    SnapshotRef ref;
    for (const auto& s : snapshots) {
      if (s.step <= t) ref = s;
    }
    for (int k = 0; k < n_obj; ++k) {
      TransitionRecord r;
      r.trajectory_id = trajectory_id;
      r.step_index = t;
      r.object_id = k;
      r.snapshot_ref = ref;
      r.robot.reserve(span_len);
      r.object.reserve(span_len);
      for (int j = 0; j < span_len; ++j) {
        const auto tau = static_cast<std::int64_t>(t) - history_len - 1 + j;
        const SceneFrame& f = frames[static_cast<std::size_t>(std::max<std::int64_t>(0, tau))];
        r.robot.push_back(f.robot);
        r.object.push_back(f.objects[k]);
      }
      r.label = label(r.object.back(), threshold_deg);
      r.current_label = label(r.object[span_len - 2], threshold_deg);
      out.push_back(std::move(r));
    }
  }
}

Dataset collect(const CollectConfig& cfg, const WorldConfig& world) {
  world.validate();
  if (cfg.n_trajectories < 0 || cfg.episode_len < 0 || cfg.history_len < 1 || cfg.snapshot_stride < 1) {
    throw ConfigError("collect: counts must be non-negative, history and stride positive");
  }
  Dataset ds;
  ds.manifest.history_len = cfg.history_len;
  ds.manifest.world = world;
  ds.manifest.policy = std::string(policy_name(cfg.policy));
  ds.manifest.seed = cfg.seed;
  ds.manifest.episode_len = cfg.episode_len;
  ds.manifest.snapshot_stride = cfg.snapshot_stride;
  ds.manifest.threshold_deg = cfg.threshold_deg;

  for (int i = 0; i < cfg.n_trajectories; ++i) {
    TrajectoryLog log;
    log.id = static_cast<std::uint64_t>(i);
    log.world_seed = derive_seed(cfg.seed, 2 * log.id);
    WorldRng goal_rng(derive_seed(cfg.seed, 2 * log.id + 1));

    World w = World::spawn(world, log.world_seed);
    HistoryTracker tracker(cfg.history_len, w);
    std::vector<SceneFrame> frames{tracker.latest()};
    auto take_snapshot = [&] {
      log.snapshots.push_back(SnapshotRef{ds.snapshots.size(), w.step_count()});
      ds.snapshots.push_back(w.snapshot());
    };
    take_snapshot();

    GoalSpec goal = sample_goal(w, w.robot().pos, cfg.goal_tolerance, goal_rng);
    for (int t = 0; t < cfg.episode_len; ++t) {
      if (goal.reached(w.robot().pos)) goal = sample_goal(w, w.robot().pos, cfg.goal_tolerance, goal_rng);
      const Action a = nominal_action(cfg.policy, tracker, goal, cfg.policy_cfg, world);
      w.step(a);
      log.actions.push_back(a);
      tracker.record(w);
      frames.push_back(tracker.latest());
      if ((t + 1) % cfg.snapshot_stride == 0 && t + 1 < cfg.episode_len) take_snapshot();
    }
    emit_records(log.id, frames, cfg.history_len, static_cast<std::uint64_t>(cfg.history_len),
                 static_cast<std::uint64_t>(cfg.episode_len), log.snapshots, ds.records, cfg.threshold_deg);
    ds.trajectories.push_back(std::move(log));
  }
  ds.refresh_counts();
  return ds;
}

Dataset balance(const Dataset& dataset, const BalanceConfig& cfg) {
  if (!(cfg.free_space_dist > 0.0) || !(cfg.motion_eps > 0.0)) {
    throw ConfigError("balance: free_space_dist and motion_eps must be positive");
  }
  Dataset out;
  out.manifest = dataset.manifest;
  out.trajectories = dataset.trajectories;
  out.snapshots = dataset.snapshots;
  for (const auto& r : dataset.records) {
    bool keep = r.label == Label::Unsafe || r.current_label == Label::Unsafe;
    for (std::size_t j = 0; !keep && j < r.object.size(); ++j) {
      if ((r.object[j].pos - r.robot[j]).norm() <= cfg.free_space_dist) keep = true;
      if ((r.object[j].pos - r.object[0].pos).norm() >= cfg.motion_eps) keep = true;
    }
    if (keep) out.records.push_back(r);
  }
  out.refresh_counts();
  return out;
}

Dataset merge(const Dataset& a, const Dataset& b) {
  if (!(a.manifest.world == b.manifest.world) || a.manifest.history_len != b.manifest.history_len ||
      a.manifest.threshold_deg != b.manifest.threshold_deg) {
    throw VersionMismatch("merge: datasets use different world configs, history lengths or thresholds");
  }
  Dataset out = a;
  const std::uint64_t traj_off = a.trajectories.size();
  const std::uint64_t snap_off = a.snapshots.size();
  for (auto t : b.trajectories) {
    t.id += traj_off;
    if (t.parent >= 0) t.parent += static_cast<std::int64_t>(traj_off);
    for (auto& s : t.snapshots) s.id += snap_off;
    out.trajectories.push_back(std::move(t));
  }
  out.snapshots.insert(out.snapshots.end(), b.snapshots.begin(), b.snapshots.end());
  for (auto r : b.records) {
    r.trajectory_id += traj_off;
    r.snapshot_ref.id += snap_off;
    out.records.push_back(std::move(r));
  }
  if (a.manifest.policy != b.manifest.policy) out.manifest.policy = a.manifest.policy + "+" + b.manifest.policy;
  out.manifest.episode_len = std::max(a.manifest.episode_len, b.manifest.episode_len);
  out.refresh_counts();
  return out;
}

}  // namespace dcbf

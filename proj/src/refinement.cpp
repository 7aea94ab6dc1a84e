#include "dcbf/filter.hpp"
#include "dcbf/serialize.hpp"
#include "dcbf/training.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace dcbf {

std::string_view refine_mode_name(RefineMode m) {
  switch (m) {
    case RefineMode::BothSides: return "both-sides";
    case RefineMode::UnsafeOnly: return "unsafe-only";
    case RefineMode::SafeOnly: return "safe-only";
  }
  return "both-sides";
}

RefineMode refine_mode_from_name(std::string_view name) {
  if (name == "both-sides") return RefineMode::BothSides;
  if (name == "unsafe-only") return RefineMode::UnsafeOnly;
  if (name == "safe-only") return RefineMode::SafeOnly;
  throw ConfigError("unknown refinement mode: " + std::string(name));
}

void RefineConfig::validate() const {
  if (!(delta > 0.0)) throw ConfigError("refine: delta must be positive");
  if (s < 1) throw ConfigError("refine: s must be at least 1");
  if (n_batches < 0 || max_samples_per_batch < 1 || finetune_epochs < 0 || max_extra_epochs < 0) {
    throw ConfigError("refine: batch counts must be non-negative");
  }
  if (grid_directions < 1 || grid_scales.empty()) throw ConfigError("refine: empty action grid");
  if (!(finetune_lr > 0.0)) throw ConfigError("refine: finetune_lr must be positive");
}

std::vector<Action> refinement_grid(const RefineConfig& cfg, double max_step) {
  std::vector<Action> grid{Action::stay()};
  for (double scale : cfg.grid_scales) {
    for (int k = 0; k < cfg.grid_directions; ++k) {
      const double phi = 2.0 * std::numbers::pi * k / cfg.grid_directions;
      grid.push_back(Action{scale * max_step * Vec2(std::cos(phi), std::sin(phi))});
    }
  }
  return grid;
}

std::vector<std::size_t> find_boundary_samples(std::span<const double> values, double delta, RefineMode mode,
                                               const std::vector<bool>* eligible) {
  if (!(delta > 0.0)) throw ConfigError("find_boundary_samples: delta must be positive");
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (eligible && !(*eligible)[i]) continue;
    const double b = values[i];
    if (std::abs(b) > delta) continue;
    if (mode == RefineMode::UnsafeOnly && b > 0.0) continue;
    if (mode == RefineMode::SafeOnly && b < 0.0) continue;
    out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> find_boundary_samples(const Dataset& dataset, const BarrierNet& net, double delta,
                                               RefineMode mode, const std::vector<bool>* eligible) {
  const std::vector<double> values = current_values(net, dataset.records);
  return find_boundary_samples(values, delta, mode, eligible);
}

std::size_t safest_index(std::span<const double> values, std::span<const Action> grid) {
  if (grid.empty() || values.size() != grid.size()) throw ShapeMismatch("safest_index: empty or mismatched grid");
  std::size_t best = 0;
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (values[i] > values[best] ||
        (values[i] == values[best] && grid[i].delta.norm() < grid[best].delta.norm())) {
      best = i;
    }
  }
  return best;
}

Action safest_control(const BarrierNet& net, const HistoryTracker& tracker, std::span<const Action> grid,
                      const WorldConfig& world) {
  std::vector<int> live;
  for (int k = 0; k < tracker.object_count(); ++k) {
    if (!tracker.latest().objects[k].fallen) live.push_back(k);
  }
  std::vector<Vec2> nexts;
  nexts.reserve(grid.size());
  for (const auto& a : grid) nexts.push_back(kinematic_next(tracker.latest().robot, a, world));
  const std::vector<double> values = global_values(net, tracker, live, nexts);
  return grid[safest_index(values, grid)];
}

RefineBatchResult refine_batch(const BarrierNet& net, Dataset& dataset, std::span<const std::size_t> samples,
                               const RefineConfig& cfg) {
  cfg.validate();
  RefineBatchResult res;
  const WorldConfig& world = dataset.manifest.world;
  const int hist = dataset.manifest.history_len;
  const std::vector<Action> grid = refinement_grid(cfg, world.max_step);

  for (std::size_t idx : samples) {
    if (idx >= dataset.records.size()) throw ShapeMismatch("refine_batch: sample index out of range");
    // Copies: the loop below appends to dataset.trajectories.
    const TransitionRecord rec = dataset.records[idx];
    const TrajectoryLog parent = dataset.trajectory(rec.trajectory_id);
    const std::uint64_t t = rec.step_index;
    if (t > parent.actions.size()) throw CorruptDataset("record step lies beyond its trajectory");

    const std::uint64_t first_needed = t >= static_cast<std::uint64_t>(hist) + 1 ? t - hist - 1 : 0;
    const SnapshotRef& snap = parent.snapshot_at_or_before(first_needed);
    if (snap.id >= dataset.snapshots.size()) throw CorruptSnapshot("missing snapshot " + std::to_string(snap.id));
    World w = World::restore(dataset.snapshots[snap.id], world);
    if (w.step_count() != snap.step) throw CorruptSnapshot("snapshot step does not match its reference");

    HistoryTracker tracker(hist, w);
    std::vector<SceneFrame> frames(snap.step, tracker.latest());
    frames.push_back(tracker.latest());
    for (std::uint64_t k = snap.step; k < t; ++k) {
      w.step(parent.actions[k]);
      tracker.record(w);
      frames.push_back(tracker.latest());
    }

    TrajectoryLog child;
    child.id = dataset.trajectories.size();
    child.world_seed = parent.world_seed;
    child.parent = static_cast<std::int64_t>(parent.id);
    child.actions.assign(parent.actions.begin(), parent.actions.begin() + static_cast<std::ptrdiff_t>(t));
    for (const auto& s : parent.snapshots) {
      if (s.step <= t) child.snapshots.push_back(s);
    }
    for (int k = 0; k < cfg.s; ++k) {
      const Action a = safest_control(net, tracker, grid, world);
      w.step(a);
      tracker.record(w);
      frames.push_back(tracker.latest());
      child.actions.push_back(a);
    }
    emit_records(child.id, frames, hist, t, t + cfg.s, child.snapshots, res.added, dataset.manifest.threshold_deg);
    dataset.trajectories.push_back(std::move(child));
    ++res.samples;
  }
  dataset.manifest.n_trajectories = dataset.trajectories.size();
  return res;
}

std::string RefineBatchLog::to_text() const {
  return Json{{"batch", batch},
              {"boundary", boundary},
              {"refined", refined},
              {"added", added},
              {"misclassified", misclassified},
              {"holdout_accuracy", holdout_accuracy},
              {"holdout_false_unsafe_rate", holdout_false_unsafe_rate},
              {"epochs", epochs}}
      .dump();
}

// Misclassified records outside the holdout; this is what refinement and
// checkpoint selection get to see.
std::size_t training_misclassified(const BarrierNet& net, const Dataset& dataset, int holdout_modulus) {
  const std::vector<bool> held = holdout_mask(dataset, holdout_modulus);
  return classify(net, dataset.records, &held, false).misclassified();
}

RefineResult refine_loop(const BarrierNet& initial, Dataset& dataset, const RefineConfig& rcfg,
                         const TrainConfig& tcfg, const std::function<void(const RefineBatchLog&)>& on_batch) {
  rcfg.validate();
  tcfg.validate();
  RefineResult res{initial, {}};
  std::size_t previous = training_misclassified(res.net, dataset, tcfg.holdout_modulus);

  for (int b = 0; b < rcfg.n_batches && previous > 0; ++b) {
    RefineBatchLog log;
    log.batch = b;
    const std::vector<bool> holdout = holdout_mask(dataset, tcfg.holdout_modulus);
    std::vector<bool> eligible(holdout.size());
    for (std::size_t i = 0; i < holdout.size(); ++i) eligible[i] = !holdout[i];
    std::vector<std::size_t> boundary = find_boundary_samples(dataset, res.net, rcfg.delta, rcfg.mode, &eligible);
    log.boundary = boundary.size();

    if (boundary.size() > static_cast<std::size_t>(rcfg.max_samples_per_batch)) {
      std::mt19937_64 rng(derive_seed(rcfg.seed, static_cast<std::uint64_t>(b)));
      std::shuffle(boundary.begin(), boundary.end(), rng);
      boundary.resize(rcfg.max_samples_per_batch);
      std::sort(boundary.begin(), boundary.end());
    }
    RefineBatchResult added = refine_batch(res.net, dataset, boundary, rcfg);
    log.refined = added.samples;
    log.added = added.added.size();
    dataset.records.insert(dataset.records.end(), std::make_move_iterator(added.added.begin()),
                           std::make_move_iterator(added.added.end()));
    dataset.refresh_counts();

    // The unchanged net competes with every fine-tuned checkpoint; the one
    // with the fewest training misclassifications is kept.
    BarrierNet best = res.net;
    std::size_t best_mis = training_misclassified(best, dataset, tcfg.holdout_modulus);
    TrainConfig fine = tcfg;
    fine.epochs = rcfg.finetune_epochs;
    fine.lr = rcfg.finetune_lr;
    fine.seed = derive_seed(tcfg.seed, 0x7265666eULL + static_cast<std::uint64_t>(b));
    BarrierNet current = train_initial(dataset, fine, res.net.arch(), &res.net).net;
    log.epochs = fine.epochs;
    auto consider = [&] {
      const std::size_t mis = training_misclassified(current, dataset, tcfg.holdout_modulus);
      if (mis < best_mis) {
        best = current;
        best_mis = mis;
      }
    };
    consider();
    for (int extra = 0; best_mis > previous && extra < rcfg.max_extra_epochs; ++extra) {
      fine.epochs = 1;
      fine.seed = derive_seed(fine.seed, 1);
      current = train_initial(dataset, fine, current.arch(), &current).net;
      ++log.epochs;
      consider();
    }
    res.net = std::move(best);
    log.misclassified = best_mis;
    const std::vector<bool> held = holdout_mask(dataset, tcfg.holdout_modulus);
    const ClassStats hs = classify(res.net, dataset.records, &held, true);
    log.holdout_accuracy = hs.accuracy();
    log.holdout_false_unsafe_rate = hs.false_unsafe_rate();
    if (on_batch) on_batch(log);
    res.log.push_back(log);
    previous = best_mis;
  }
  return res;
}

}  // namespace dcbf

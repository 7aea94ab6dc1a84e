#pragma once

// Labeled per-object transition pairs and the datasets built from them.
//
// A record keyed at step t stores the absolute object states o^{t-T-1} ..
// o^{t+1} and end-effector positions r^{t-T-1} .. r^{t+1} (T+3 entries each,
// back-filled with the episode's first state during warm-up). From these:
//
//   current = (r^t,     O^{t-1})   entries 0 .. T
//   next    = (r^{t+1}, O^t)       entries 1 .. T+1
//
// `label` is the safety of o^{t+1}, the state B(next) speaks for, and
// `current_label` the safety of o^t, the state B(current) speaks for.

#include "dcbf/barrier.hpp"
#include "dcbf/policies.hpp"
#include "dcbf/sim.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace dcbf {

enum class Label : std::uint8_t { Safe = 0, Unsafe = 1 };

/// Unsafe iff fallen or tilt >= threshold (inclusive).
Label label(double next_object_tilt_deg, bool fallen, double threshold_deg = kViolationThresholdDeg);
Label label(const ObjectObservation& o, double threshold_deg = kViolationThresholdDeg);

struct SnapshotRef {
  std::uint64_t id = 0;  // index into Dataset::snapshots
  std::uint64_t step = 0;

  bool operator==(const SnapshotRef&) const = default;
};

struct TransitionRecord {
  std::uint64_t trajectory_id = 0;
  std::uint64_t step_index = 0;
  int object_id = 0;
  std::vector<Vec2> robot;
  std::vector<ObjectObservation> object;
  Label label = Label::Safe;
  Label current_label = Label::Safe;
  SnapshotRef snapshot_ref;

  int history_len() const { return static_cast<int>(object.size()) - 3; }
  Vec2 robot_current() const { return robot[robot.size() - 2]; }
  Vec2 robot_next() const { return robot.back(); }
  ObjectHistory current_history() const;
  ObjectHistory next_history() const;
  RelativeObservation current_obs() const;
  RelativeObservation next_obs() const;
  bool current_fallen() const { return object[object.size() - 2].fallen; }

  bool operator==(const TransitionRecord&) const = default;
};

/// Actions that regenerate a trajectory from its seed, plus the snapshots
/// taken along it. Refinement rollouts share their parent's prefix.
struct TrajectoryLog {
  std::uint64_t id = 0;
  std::uint64_t world_seed = 0;
  std::int64_t parent = -1;
  std::vector<Action> actions;
  std::vector<SnapshotRef> snapshots;  // ascending by step

  /// Latest snapshot at or before `step`.
  const SnapshotRef& snapshot_at_or_before(std::uint64_t step) const;

  bool operator==(const TrajectoryLog&) const = default;
};

struct DatasetManifest {
  int format_version = 1;
  int history_len = 8;
  WorldConfig world;
  std::string policy = "backstep";
  std::uint64_t seed = 0;
  std::uint64_t n_trajectories = 0;
  int episode_len = 0;
  int snapshot_stride = 4;
  double threshold_deg = kViolationThresholdDeg;
  std::uint64_t n_safe = 0;
  std::uint64_t n_unsafe = 0;

  bool operator==(const DatasetManifest&) const = default;
};

struct Dataset {
  DatasetManifest manifest;
  std::vector<TransitionRecord> records;
  std::vector<TrajectoryLog> trajectories;
  std::vector<WorldSnapshot> snapshots;

  /// Recomputes n_safe / n_unsafe / n_trajectories from the contents.
  void refresh_counts();
  const TrajectoryLog& trajectory(std::uint64_t id) const;

  bool operator==(const Dataset&) const = default;
};

struct CollectConfig {
  PolicyKind policy = PolicyKind::Backstep;
  PolicyConfig policy_cfg;
  int n_trajectories = 200;
  int episode_len = 150;
  int history_len = 8;
  int snapshot_stride = 4;
  double goal_tolerance = 0.02;
  double threshold_deg = kViolationThresholdDeg;
  std::uint64_t seed = 0;
};

/// Goals lie in the half of the table away from `from` (x >= 0 when
/// from.x < 0, and vice versa), clear of every live object, and are
/// rejection-sampled so the straight path from `from` brushes at least one
/// live object when any exists.
GoalSpec sample_goal(const World& world, const Vec2& from, double tolerance, WorldRng& rng,
                     int max_tries = 1000);

/// Rolls out the configured baseline; goals are resampled when reached.
Dataset collect(const CollectConfig& cfg, const WorldConfig& world);

/// Records for steps first_step .. last_step-1 of one trajectory, given the
/// frames at every step 0 .. last_step (frames[k] is the scene after k steps).
void emit_records(std::uint64_t trajectory_id, std::span<const SceneFrame> frames, int history_len,
                  std::uint64_t first_step, std::uint64_t last_step, std::span<const SnapshotRef> snapshots,
                  std::vector<TransitionRecord>& out, double threshold_deg = kViolationThresholdDeg);

struct BalanceConfig {
  double free_space_dist = 0.15;
  double motion_eps = 1e-4;
};

/// Drops free-space records: the object stayed farther than free_space_dist
/// from the end-effector over the whole window and moved less than
/// motion_eps. Records with either label Unsafe are always kept.
Dataset balance(const Dataset& dataset, const BalanceConfig& cfg);

/// Concatenates b onto a, renumbering b's trajectories and snapshots.
/// Throws VersionMismatch when world configs or history lengths differ.
Dataset merge(const Dataset& a, const Dataset& b);

/// Deterministic 64-bit stream splitting.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);

}  // namespace dcbf

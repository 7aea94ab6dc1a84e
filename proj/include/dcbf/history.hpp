#pragma once

// Rolling per-object state windows for online use.
//
// The tracker holds the last T+2 scene frames so both O^t and O^{t-1} are
// available. Before T+1 frames exist, the window is back-filled with the
// episode's first frame ("the object has not moved").

#include "dcbf/barrier.hpp"
#include "dcbf/sim.hpp"

#include <deque>
#include <span>
#include <vector>

namespace dcbf {

struct SceneFrame {
  Vec2 robot = Vec2::Zero();
  std::vector<ObjectObservation> objects;
};

SceneFrame observe_scene(const World& world);

class HistoryTracker;

/// Objects worth checking: base within `radius` of the end-effector, or moved
/// by at least `motion_eps` inside the current window. Fallen objects never
/// qualify.
struct RelevanceRule {
  double radius = 0.2;
  double motion_eps = 1e-4;
};

std::vector<int> relevant_objects(const HistoryTracker& tracker, const RelevanceRule& rule);

class HistoryTracker {
 public:
  HistoryTracker(int history_len, const World& world);

  /// Appends the world's current state (call once after every step).
  void record(const World& world);

  int history_len() const { return history_len_; }
  int object_count() const { return static_cast<int>(frames_.back().objects.size()); }
  const SceneFrame& latest() const { return frames_.back(); }

  /// O^t: anchor at t-T, then o^{t-T+1} .. o^t.
  ObjectHistory history(int object) const;
  /// O^{t-1}: the same window one step earlier.
  ObjectHistory previous_history(int object) const;

  /// Every end-effector position since the episode started, oldest first.
  std::span<const Vec2> robot_path() const { return robot_path_; }

 private:
  ObjectHistory window(int object, std::size_t newest) const;

  int history_len_;
  std::deque<SceneFrame> frames_;
  std::vector<Vec2> robot_path_;
};

}  // namespace dcbf

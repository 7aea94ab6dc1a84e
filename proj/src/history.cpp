#include "dcbf/history.hpp"

namespace dcbf {

SceneFrame observe_scene(const World& world) {
  SceneFrame f;
  f.robot = world.robot().pos;
  f.objects.reserve(world.objects().size());
  for (const auto& o : world.objects()) f.objects.push_back(observe(o));
  return f;
}

HistoryTracker::HistoryTracker(int history_len, const World& world) : history_len_(history_len) {
  if (history_len < 1) throw ConfigError("history length must be at least 1");
  const SceneFrame first = observe_scene(world);
  frames_.assign(static_cast<std::size_t>(history_len) + 2, first);
  robot_path_.push_back(first.robot);
}

void HistoryTracker::record(const World& world) {
  frames_.pop_front();
  frames_.push_back(observe_scene(world));
  robot_path_.push_back(frames_.back().robot);
}

ObjectHistory HistoryTracker::window(int object, std::size_t newest) const {
  ObjectHistory h;
  h.object_id = object;
  h.entries.reserve(static_cast<std::size_t>(history_len_) + 1);
  for (std::size_t i = newest - history_len_; i <= newest; ++i) {
    h.entries.push_back(frames_[i].objects.at(object));
  }
  return h;
}

ObjectHistory HistoryTracker::history(int object) const { return window(object, frames_.size() - 1); }

ObjectHistory HistoryTracker::previous_history(int object) const {
  return window(object, frames_.size() - 2);
}

std::vector<int> relevant_objects(const HistoryTracker& tracker, const RelevanceRule& rule) {
  std::vector<int> out;
  const SceneFrame& now = tracker.latest();
  for (int k = 0; k < tracker.object_count(); ++k) {
    const ObjectObservation& o = now.objects[k];
    if (o.fallen) continue;
    if ((o.pos - now.robot).norm() <= rule.radius ||
        tracker.history(k).window_displacement() >= rule.motion_eps) {
      out.push_back(k);
    }
  }
  return out;
}

}  // namespace dcbf

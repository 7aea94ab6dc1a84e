#include "dcbf/policies.hpp"

#include <algorithm>

namespace dcbf {

void APFConfig::validate() const {
  if (!(kp > 0.0) || !(eta >= 0.0) || !(influence_len > 0.0) || oscillation_len < 1 ||
      !(oscillation_tol >= 0.0)) {
    throw ConfigError("APF gains and lengths must be positive");
  }
}

Action do_nothing_policy(const RobotState& state, const GoalSpec& goal, double max_step) {
  return Action{clamp_norm(goal.pos - state.pos, max_step)};
}

Action back_stepping_policy(const RobotState& state, const GoalSpec& goal, double observed_max_tilt_deg,
                            std::span<const Vec2> waypoint_history, const BackstepConfig& cfg,
                            double max_step) {
  if (observed_max_tilt_deg < cfg.trigger_deg) return do_nothing_policy(state, goal, max_step);
  if (waypoint_history.empty()) return Action::stay();
  const auto t = static_cast<std::ptrdiff_t>(waypoint_history.size()) - 1;
  const Vec2& back = waypoint_history[std::max<std::ptrdiff_t>(0, t - cfg.lookback)];
  return Action{clamp_norm(back - state.pos, max_step)};
}

bool apf_oscillating(std::span<const Vec2> recent_positions, const APFConfig& cfg) {
  const auto n = std::min<std::size_t>(recent_positions.size(), cfg.oscillation_len);
  const auto tail = recent_positions.last(n);
  for (std::size_t i = 0; i < tail.size(); ++i) {
    for (std::size_t j = i + 1; j < tail.size(); ++j) {
      if ((tail[i] - tail[j]).norm() <= cfg.oscillation_tol) return true;
    }
  }
  return false;
}

Action apf_policy(const RobotState& state, const GoalSpec& goal, std::span<const Vec2> object_positions,
                  double object_radius, const APFConfig& cfg, std::span<const Vec2> recent_positions,
                  double max_step) {
  if (cfg.eta == 0.0) return do_nothing_policy(state, goal, max_step);
  if (apf_oscillating(recent_positions, cfg)) return Action::stay();
  Vec2 force = Vec2::Zero();
  for (const Vec2& c : object_positions) {
    const Vec2 away = state.pos - c;
    const double centre = away.norm();
    const double d = std::max(centre - object_radius, 1e-6);
    if (d >= cfg.influence_len || centre == 0.0) continue;
    force += cfg.eta * (1.0 / d - 1.0 / cfg.influence_len) / (d * d) * (away / centre);
  }
  return Action{clamp_norm((goal.pos - state.pos) + force / cfg.kp, max_step)};
}

std::string_view policy_name(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::DoNothing: return "donothing";
    case PolicyKind::Backstep: return "backstep";
    case PolicyKind::Apf: return "apf";
    case PolicyKind::Dcbf: return "dcbf";
  }
  return "donothing";
}

PolicyKind policy_from_name(std::string_view name) {
  if (name == "donothing" || name == "do-nothing") return PolicyKind::DoNothing;
  if (name == "backstep" || name == "backstepping") return PolicyKind::Backstep;
  if (name == "apf") return PolicyKind::Apf;
  if (name == "dcbf") return PolicyKind::Dcbf;
  throw ConfigError("unknown policy: " + std::string(name));
}

double observed_max_tilt_deg(const HistoryTracker& tracker, const RelevanceRule& rule) {
  double best = 0.0;
  for (int k : relevant_objects(tracker, rule)) {
    best = std::max(best, rad_to_deg(tracker.latest().objects[k].theta));
  }
  return best;
}

Action nominal_action(PolicyKind kind, const HistoryTracker& tracker, const GoalSpec& goal,
                      const PolicyConfig& cfg, const WorldConfig& world) {
  const RobotState robot{tracker.latest().robot};
  switch (kind) {
    case PolicyKind::DoNothing:
    case PolicyKind::Dcbf:
      return do_nothing_policy(robot, goal, world.max_step);
    case PolicyKind::Backstep:
      return back_stepping_policy(robot, goal, observed_max_tilt_deg(tracker, cfg.relevance),
                                  tracker.robot_path(), cfg.backstep, world.max_step);
    case PolicyKind::Apf: {
      std::vector<Vec2> live;
      for (const auto& o : tracker.latest().objects) {
        if (!o.fallen) live.push_back(o.pos);
      }
      return apf_policy(robot, goal, live, world.obj_radius, cfg.apf, tracker.robot_path(), world.max_step);
    }
  }
  return Action::stay();
}

}  // namespace dcbf

#pragma once

// Goal-reaching baselines. They double as nominal controllers for the filter
// and as data collectors.

#include "dcbf/history.hpp"
#include "dcbf/sim.hpp"

#include <span>
#include <string>
#include <string_view>

namespace dcbf {

struct GoalSpec {
  Vec2 pos = Vec2::Zero();
  double tolerance = 0.02;

  bool reached(const Vec2& p) const { return (p - pos).norm() <= tolerance; }
};

struct APFConfig {
  double kp = 5.0;
  double eta = 50.0;
  double influence_len = 1.2;
  int oscillation_len = 3;
  double oscillation_tol = 1e-3;

  void validate() const;
};

struct BackstepConfig {
  double trigger_deg = 14.0;
  int lookback = 5;
};

/// Straight toward the goal, at most max_step.
Action do_nothing_policy(const RobotState& state, const GoalSpec& goal, double max_step);

/// Retreats toward the end-effector position `lookback` steps ago once the
/// observed tilt reaches the trigger. `waypoint_history` ends with the
/// current position.
Action back_stepping_policy(const RobotState& state, const GoalSpec& goal, double observed_max_tilt_deg,
                            std::span<const Vec2> waypoint_history, const BackstepConfig& cfg,
                            double max_step);

/// True when two of the last `oscillation_len` positions lie within
/// `oscillation_tol` of each other.
bool apf_oscillating(std::span<const Vec2> recent_positions, const APFConfig& cfg);

/// Descent direction of U = kp/2 |x-g|^2 + sum eta/2 (1/d - 1/d0)^2 (d < d0),
/// with d the distance to an object's base circle. The step is -grad U / kp,
/// clamped to max_step, so eta = 0 reproduces do_nothing_policy exactly.
Action apf_policy(const RobotState& state, const GoalSpec& goal, std::span<const Vec2> object_positions,
                  double object_radius, const APFConfig& cfg, std::span<const Vec2> recent_positions,
                  double max_step);

enum class PolicyKind { DoNothing, Backstep, Apf, Dcbf };

std::string_view policy_name(PolicyKind kind);
/// Accepts donothing | backstep | backstepping | apf | dcbf.
PolicyKind policy_from_name(std::string_view name);

struct PolicyConfig {
  APFConfig apf;
  BackstepConfig backstep;
  RelevanceRule relevance;
};

/// Largest tilt in degrees among relevant objects (0 when none).
double observed_max_tilt_deg(const HistoryTracker& tracker, const RelevanceRule& rule);

/// The action a baseline takes in the tracked scene. Dcbf uses do-nothing as
/// its nominal controller; the filter is applied separately.
Action nominal_action(PolicyKind kind, const HistoryTracker& tracker, const GoalSpec& goal,
                      const PolicyConfig& cfg, const WorldConfig& world);

}  // namespace dcbf

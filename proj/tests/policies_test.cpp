#include "dcbf/policies.hpp"

#include <gtest/gtest.h>

namespace dcbf {
namespace {

constexpr double kMaxStep = 0.01;

TEST(DoNothing, LandsOnNearGoal) {
  const GoalSpec g{Vec2(0.005, 0.0)};
  const Action a = do_nothing_policy(RobotState{Vec2::Zero()}, g, kMaxStep);
  EXPECT_EQ(a.delta, Vec2(0.005, 0.0));
}

TEST(DoNothing, ZeroAtGoalAndClampedFarAway) {
  EXPECT_EQ(do_nothing_policy(RobotState{Vec2(0.2, 0.1)}, GoalSpec{Vec2(0.2, 0.1)}, kMaxStep), Action::stay());
  const Action a = do_nothing_policy(RobotState{Vec2::Zero()}, GoalSpec{Vec2(1.0, 0.0)}, kMaxStep);
  EXPECT_DOUBLE_EQ(a.delta.x(), 0.01);
  EXPECT_DOUBLE_EQ(a.delta.y(), 0.0);
}

TEST(Backstep, TriggerPointsToEarlierWaypoint) {
  const std::vector<Vec2> path{Vec2(-0.06, 0.0), Vec2(-0.05, 0.0), Vec2(-0.04, 0.0), Vec2(-0.03, 0.0),
                               Vec2(-0.02, 0.0), Vec2(-0.01, 0.0), Vec2(0.0, 0.0)};
  const RobotState s{path.back()};
  const GoalSpec g{Vec2(0.5, 0.0)};
  const Action back = back_stepping_policy(s, g, 14.5, path, BackstepConfig{}, kMaxStep);
  EXPECT_LT(back.delta.x(), 0.0);
  EXPECT_NEAR(back.delta.norm(), kMaxStep, 1e-15);
  const Action fwd = back_stepping_policy(s, g, 5.0, path, BackstepConfig{}, kMaxStep);
  EXPECT_EQ(fwd, do_nothing_policy(s, g, kMaxStep));
}

TEST(Backstep, TriggerExactlyAtFourteenDegrees) {
  const std::vector<Vec2> path{Vec2(-0.01, 0.0), Vec2::Zero()};
  const Action a = back_stepping_policy(RobotState{Vec2::Zero()}, GoalSpec{Vec2(1.0, 0.0)}, 14.0, path,
                                        BackstepConfig{}, kMaxStep);
  EXPECT_EQ(a.delta, Vec2(-0.01, 0.0));
}

TEST(Backstep, EmptyHistoryStays) {
  const Action a =
      back_stepping_policy(RobotState{Vec2::Zero()}, GoalSpec{Vec2(1.0, 0.0)}, 20.0, {}, BackstepConfig{}, kMaxStep);
  EXPECT_EQ(a, Action::stay());
}

TEST(Apf, NoObstaclesMatchesDoNothingDirection) {
  const RobotState s{Vec2(-0.3, 0.2)};
  const GoalSpec g{Vec2(0.4, -0.1)};
  const Action a = apf_policy(s, g, {}, 0.05, APFConfig{}, {}, kMaxStep);
  const Action d = do_nothing_policy(s, g, kMaxStep);
  EXPECT_NEAR(a.delta.normalized().dot(d.delta.normalized()), 1.0, 1e-12);
}

TEST(Apf, ZeroEtaIsDoNothing) {
  APFConfig cfg;
  cfg.eta = 0.0;
  const std::vector<Vec2> obs{Vec2(0.05, 0.0)};
  const RobotState s{Vec2::Zero()};
  const GoalSpec g{Vec2(0.3, 0.0)};
  EXPECT_EQ(apf_policy(s, g, obs, 0.05, cfg, {}, kMaxStep), do_nothing_policy(s, g, kMaxStep));
}

TEST(Apf, BlockingObstacleMidwaySlowsTheStep) {
  // EE at the origin, obstacle centre c on the +x axis, goal at 2c: the EE
  // is as far from the obstacle as the obstacle is from the goal.
  const double c = 1.0236;
  const double r = 0.05;
  const APFConfig cfg;
  const double d = c - r;
  const double repulse = cfg.eta * (1.0 / d - 1.0 / cfg.influence_len) / (d * d) / cfg.kp;
  const double expected = 2.0 * c - repulse;  // attraction minus repulsion along +x
  ASSERT_LT(std::abs(expected), kMaxStep);
  const std::vector<Vec2> obs{Vec2(c, 0.0)};
  const Action a = apf_policy(RobotState{Vec2::Zero()}, GoalSpec{Vec2(2.0 * c, 0.0)}, obs, r, cfg, {}, kMaxStep);
  EXPECT_LT(a.delta.norm(), kMaxStep);
  EXPECT_NEAR(a.delta.x(), expected, 1e-12);
  EXPECT_EQ(a.delta.y(), 0.0);
}

TEST(Apf, RepulsionPointsAwayFromNearObstacle) {
  const std::vector<Vec2> obs{Vec2(0.1, 0.0)};
  const Action a = apf_policy(RobotState{Vec2::Zero()}, GoalSpec{Vec2(0.5, 0.0)}, obs, 0.05, APFConfig{}, {},
                              kMaxStep);
  EXPECT_LT(a.delta.x(), 0.0);
}

TEST(Apf, OscillationStays) {
  const std::vector<Vec2> recent{Vec2(0.0, 0.0), Vec2(0.0005, 0.0), Vec2(0.0002, 0.0003)};
  EXPECT_TRUE(apf_oscillating(recent, APFConfig{}));
  const Action a = apf_policy(RobotState{recent.back()}, GoalSpec{Vec2(0.5, 0.0)}, {}, 0.05, APFConfig{}, recent,
                              kMaxStep);
  EXPECT_EQ(a, Action::stay());
  const std::vector<Vec2> moving{Vec2(0.0, 0.0), Vec2(0.01, 0.0), Vec2(0.02, 0.0)};
  EXPECT_FALSE(apf_oscillating(moving, APFConfig{}));
}

TEST(Policy, NamesRoundTrip) {
  for (auto k : {PolicyKind::DoNothing, PolicyKind::Backstep, PolicyKind::Apf, PolicyKind::Dcbf}) {
    EXPECT_EQ(policy_from_name(policy_name(k)), k);
  }
  EXPECT_EQ(policy_from_name("backstepping"), PolicyKind::Backstep);
  EXPECT_THROW(policy_from_name("greedy"), ConfigError);
}

TEST(Policy, ObservedTiltUsesRelevantObjectsOnly) {
  WorldConfig c;
  ObjectState near, far;
  near.pos = Vec2(0.1, 0.0);
  near.theta = deg_to_rad(10.0);
  far.pos = Vec2(0.5, 0.0);
  far.theta = deg_to_rad(20.0);
  const World w = World::from_state(c, RobotState{Vec2::Zero()}, {near, far}, {{}, {}});
  const HistoryTracker tr(4, w);
  EXPECT_NEAR(observed_max_tilt_deg(tr, RelevanceRule{}), 10.0, 1e-12);
}

}  // namespace
}  // namespace dcbf

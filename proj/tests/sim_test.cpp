#include "dcbf/sim.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

namespace dcbf {
namespace {

WorldConfig small_config(int n) {
  WorldConfig c;
  c.n_objects = n;
  return c;
}

World single_object(double mu_s, Vec2 obj = Vec2(0.0, 0.0), Vec2 ee = Vec2(-0.08, 0.0)) {
  ObjectState o;
  o.pos = obj;
  ObjectPhys p;
  p.mu_s = mu_s;
  return World::from_state(small_config(1), RobotState{ee}, {o}, {p});
}

TEST(Spawn, SameSeedSameBytes) {
  const WorldConfig c = small_config(10);
  EXPECT_EQ(World::spawn(c, 42).snapshot(), World::spawn(c, 42).snapshot());
  EXPECT_NE(World::spawn(c, 42).snapshot(), World::spawn(c, 43).snapshot());
}

TEST(Spawn, PlacementInvariants) {
  const WorldConfig c = small_config(20);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const World w = World::spawn(c, seed);
    ASSERT_EQ(w.size(), 20);
    for (int i = 0; i < w.size(); ++i) {
      const auto& o = w.objects()[i];
      EXPECT_EQ(o.theta, 0.0);
      EXPECT_FALSE(o.fallen);
      EXPECT_GE((o.pos - w.robot().pos).norm(), c.obj_radius + c.ee_radius);
      const auto& ph = w.phys()[i];
      EXPECT_GE(ph.mass, c.mass_range.min);
      EXPECT_LE(ph.mass, c.mass_range.max);
      EXPECT_LT(ph.mu_d, ph.mu_s);
      for (int j = i + 1; j < w.size(); ++j) {
        EXPECT_GE((o.pos - w.objects()[j].pos).norm(), 2.0 * c.obj_radius);
      }
    }
  }
}

TEST(Spawn, FortyObjectsFit) {
  // 40 pi 0.05^2 / 1.2^2 ~ 0.218 packing fraction.
  EXPECT_NEAR(40 * std::numbers::pi * 0.05 * 0.05 / (1.2 * 1.2), 0.218, 1e-3);
  EXPECT_NO_THROW(World::spawn(small_config(40), 7));
}

TEST(Spawn, InfeasiblePacking) {
  EXPECT_THROW(World::spawn(small_config(400), 1), PlacementInfeasible);
}

TEST(Spawn, EmptySceneStepsOnlyTheRobot) {
  World w = World::spawn(small_config(0), 3);
  const StepReport r = w.step(Action{Vec2(0.01, 0.0)});
  EXPECT_EQ(w.size(), 0);
  EXPECT_TRUE(r.contacts.empty());
  EXPECT_DOUBLE_EQ(w.robot().pos.x(), -0.45 + 0.01);
}

TEST(Step, FreeMotion) {
  World w = single_object(0.6, Vec2(0.3, 0.3));
  const auto before = w.objects()[0];
  w.step(Action{Vec2(0.01, 0.0)});
  EXPECT_DOUBLE_EQ(w.robot().pos.x(), -0.08 + 0.01);
  EXPECT_EQ(w.objects()[0], before);
  EXPECT_EQ(w.step_count(), 1u);
}

TEST(Step, ActionIsClampedToMaxStep) {
  World w = single_object(0.6, Vec2(0.3, 0.3));
  w.step(Action{Vec2(0.3, 0.4)});
  EXPECT_NEAR((w.robot().pos - Vec2(-0.08, 0.0)).norm(), 0.01, 1e-15);
}

TEST(Step, TiltLawExample) {
  // EE 6 mm short of contact moving 1 cm: the object is displaced 4 mm.
  World w = single_object(0.6, Vec2(0.0, 0.0), Vec2(-0.076, 0.0));
  const StepReport r = w.step(Action{Vec2(0.01, 0.0)});
  EXPECT_NEAR(r.displacement[0].norm(), 0.004, 1e-12);
  EXPECT_NEAR(r.tilt_delta[0], 25 * 0.004 * 0.6 * 2, 1e-10);
  EXPECT_NEAR(w.objects()[0].theta, 0.12, 1e-10);
  EXPECT_NEAR(w.objects()[0].z, 0.1 * std::cos(0.12), 1e-12);
}

TEST(Step, FallsAtCriticalTilt) {
  const double crit = std::atan(0.05 / 0.10);
  EXPECT_NEAR(small_config(1).critical_tilt(), crit, 1e-15);
  ObjectState o;
  o.theta = crit - 0.01;
  World w = World::from_state(small_config(1), RobotState{Vec2(-0.075, 0.0)}, {o}, {ObjectPhys{}});
  w.step(Action{Vec2(0.01, 0.0)});
  EXPECT_TRUE(w.objects()[0].fallen);
  EXPECT_DOUBLE_EQ(w.objects()[0].theta, std::numbers::pi / 2);
  EXPECT_TRUE(is_violation(w.objects()[0]));
}

TEST(Step, FallenIsIrreversibleAndInert) {
  ObjectState o;
  o.fallen = true;
  World w = World::from_state(small_config(1), RobotState{Vec2(-0.08, 0.0)}, {o}, {ObjectPhys{}});
  for (int k = 0; k < 20; ++k) w.step(Action{Vec2(0.01, 0.0)});
  EXPECT_TRUE(w.objects()[0].fallen);
  EXPECT_DOUBLE_EQ(w.objects()[0].theta, std::numbers::pi / 2);
  EXPECT_EQ(w.objects()[0].pos, Vec2(0.0, 0.0));
}

TEST(Step, RecoveryWithinCeilSteps) {
  ObjectState o;
  o.theta = 0.33;
  World w = World::from_state(small_config(1), RobotState{Vec2(-0.4, 0.0)}, {o}, {ObjectPhys{}});
  const int bound = static_cast<int>(std::ceil(0.33 / 0.05));
  for (int k = 0; k < bound; ++k) w.step(Action::stay());
  EXPECT_EQ(w.objects()[0].theta, 0.0);
}

TEST(Step, ZeroActionIsFixedPointApartFromRecovery) {
  World w = World::spawn(small_config(10), 5);
  const World before = w;
  w.step(Action::stay());
  for (int i = 0; i < w.size(); ++i) EXPECT_EQ(w.objects()[i], before.objects()[i]);
  EXPECT_EQ(w.robot(), before.robot());
}

TEST(Step, SustainedPushNeverLowersTilt) {
  World w = single_object(0.5, Vec2(0.0, 0.0), Vec2(-0.0705, 0.0));
  double last = 0.0;
  for (int k = 0; k < 6 && !w.objects()[0].fallen; ++k) {
    w.step(Action{Vec2(0.002, 0.0)});
    EXPECT_GE(w.objects()[0].theta, last);
    last = w.objects()[0].theta;
  }
}

TEST(Step, ChainPushAndNonPenetration) {
  ObjectState a, b;
  a.pos = Vec2(0.0, 0.0);
  b.pos = Vec2(0.1, 0.0);
  World w = World::from_state(small_config(2), RobotState{Vec2(-0.07, 0.0)}, {a, b}, {ObjectPhys{}, ObjectPhys{}});
  const StepReport r = w.step(Action{Vec2(0.005, 0.0)});
  EXPECT_GT(r.displacement[1].norm(), 0.0);
  EXPECT_LE(w.max_overlap(), 1e-9);
}

TEST(Step, JammedAgainstWallShortensMotion) {
  // Object pinned at the wall; the EE cannot push it further.
  const WorldConfig c = small_config(1);
  ObjectState o;
  o.pos = Vec2(c.half_side() - c.obj_radius, 0.0);
  World w = World::from_state(c, RobotState{Vec2(o.pos.x() - 0.07, 0.0)}, {o}, {ObjectPhys{}});
  const StepReport r = w.step(Action{Vec2(0.01, 0.0)});
  EXPECT_LT(r.ee_scale, 1.0);
  EXPECT_LE(w.max_overlap(), 1e-9);
}

TEST(TiltDeg, Conversions) {
  ObjectState o;
  EXPECT_EQ(tilt_deg(o), 0.0);
  o.theta = std::numbers::pi / 2;
  EXPECT_DOUBLE_EQ(tilt_deg(o), 90.0);
  o.theta = 0.2618;
  EXPECT_NEAR(tilt_deg(o), 15.0, 1e-3);
  o.theta = std::numbers::pi / 12;
  EXPECT_NEAR(tilt_deg(o), 15.0, 1e-9);
}

TEST(Violation, InclusiveThreshold) {
  ObjectState o;
  o.theta = deg_to_rad(14.99);
  EXPECT_FALSE(is_violation(o, 15.0));
  o.theta = deg_to_rad(15.0);
  EXPECT_TRUE(is_violation(o, 15.0));
  o.theta = 0.0;
  o.fallen = true;
  EXPECT_TRUE(is_violation(o, 15.0));
}

TEST(Snapshot, RoundTripBytes) {
  World w = World::spawn(small_config(10), 9);
  for (int k = 0; k < 30; ++k) w.step(Action{Vec2(0.01, 0.003)});
  const WorldSnapshot s = w.snapshot();
  EXPECT_EQ(World::restore(s, w.config()).snapshot(), s);
  EXPECT_EQ(s.bytes.substr(0, 8), "DCBFSNAP");
}

TEST(Snapshot, ReplayMatchesContinuation) {
  World w = World::spawn(small_config(10), 11);
  for (int k = 0; k < 20; ++k) w.step(Action{Vec2(0.01, 0.0)});
  World replay = World::restore(w.snapshot(), w.config());
  for (int k = 0; k < 50; ++k) {
    const Action a{Vec2(0.01 * std::cos(0.1 * k), 0.01 * std::sin(0.1 * k))};
    w.step(a);
    replay.step(a);
  }
  EXPECT_EQ(w.snapshot(), replay.snapshot());
}

TEST(Snapshot, DifferentConfigRejected) {
  const World w = World::spawn(small_config(4), 1);
  WorldConfig other = w.config();
  other.tilt_gain = 30.0;
  EXPECT_THROW(World::restore(w.snapshot(), other), CorruptSnapshot);
}

TEST(Snapshot, MalformedBytesRejected) {
  const World w = World::spawn(small_config(4), 1);
  WorldSnapshot s = w.snapshot();
  s.bytes.resize(s.bytes.size() / 2);
  EXPECT_THROW(World::restore(s, w.config()), CorruptSnapshot);
  s.bytes[0] = 'X';
  EXPECT_THROW(World::restore(s, w.config()), CorruptSnapshot);
}

TEST(Config, ValidateRejectsBadFriction) {
  WorldConfig c;
  c.dynamic_friction_range = {0.6, 0.8};
  EXPECT_THROW(c.validate(), ConfigError);
}

}  // namespace
}  // namespace dcbf

#include "dcbf/barrier.hpp"
#include "dcbf/history.hpp"

#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>

namespace dcbf {
namespace {

ArchSpec small_arch(int T = 4) {
  ArchSpec a;
  a.history_len = T;
  a.lstm_hidden = 6;
  a.robot_layers = {5};
  a.head_layers = {7};
  return a;
}

ObjectHistory random_history(int T, std::mt19937_64& rng, Vec2 base = Vec2::Zero()) {
  std::uniform_real_distribution<double> u(-0.05, 0.05), th(0.0, 0.4);
  ObjectHistory h;
  for (int k = 0; k <= T; ++k) {
    const double theta = th(rng);
    h.entries.push_back(ObjectObservation{base + Vec2(u(rng), u(rng)), 0.1 * std::cos(theta), theta, false});
  }
  return h;
}

TEST(ObjectFrame, RelativeToAnchor) {
  ObjectHistory h;
  h.entries = {{Vec2(1.0, 2.0), 0.1, 0.0, false}, {Vec2(1.5, 2.0), 0.09, 0.2, false}, {Vec2(1.0, 3.0), 0.08, 0.3, false}};
  const RelativeObservation r = to_object_frame(Vec2(2.0, 2.0), h, 2);
  EXPECT_EQ(r.rel_robot_next, Vec2(1.0, 0.0));
  ASSERT_EQ(r.rel_history.rows(), 2);
  EXPECT_EQ(r.rel_history.row(0), Eigen::RowVector4d(0.5, 0.0, 0.09, 0.2));
  EXPECT_EQ(r.rel_history.row(1), Eigen::RowVector4d(0.0, 1.0, 0.08, 0.3));
  EXPECT_DOUBLE_EQ(h.window_displacement(), 1.0);
}

TEST(ObjectFrame, HistoryLengthChecked) {
  ObjectHistory h;
  h.entries.resize(3);
  EXPECT_THROW(to_object_frame(Vec2::Zero(), h, 3), ShortHistory);
  EXPECT_THROW(to_object_frame(Vec2::Zero(), h, 1), ShapeMismatch);
}

TEST(Barrier, TranslationInvariant) {
  std::mt19937_64 rng(7);
  const BarrierNet net(small_arch(), 3);
  for (int s = 0; s < 20; ++s) {
    const ObjectHistory h = random_history(4, rng);
    ObjectHistory moved = h;
    const Vec2 off(0.37 * s - 2.0, -0.11 * s + 1.0);
    for (auto& e : moved.entries) e.pos += off;
    const Vec2 r(0.03, -0.02);
    const double a = net.value(to_object_frame(r, h, 4));
    const double b = net.value(to_object_frame(r + off, moved, 4));
    EXPECT_NEAR(a, b, 1e-12);
  }
}

TEST(Barrier, BatchMatchesSingleBits) {
  std::mt19937_64 rng(8);
  const BarrierNet net(small_arch(), 4);
  std::vector<RelativeObservation> obs;
  for (int s = 0; s < 9; ++s) obs.push_back(to_object_frame(Vec2(0.01 * s, 0.0), random_history(4, rng), 4));
  const Eigen::VectorXd batch = batched_barrier(net, obs);
  for (int s = 0; s < 9; ++s) EXPECT_EQ(batch(s), net.value(obs[s]));
}

TEST(Barrier, PairValuesMatchPerPair) {
  std::mt19937_64 rng(9);
  const BarrierNet net(small_arch(), 5);
  std::vector<ObjectHistory> hs{random_history(4, rng), random_history(4, rng, Vec2(0.3, 0.1))};
  std::vector<Vec2> robots{Vec2(0.0, 0.0), Vec2(0.2, 0.1), Vec2(-0.1, 0.05)};
  const Eigen::MatrixXd m = net.pair_values(hs, robots);
  for (int c = 0; c < 3; ++c)
    for (int k = 0; k < 2; ++k) EXPECT_EQ(m(c, k), net.value(to_object_frame(robots[c], hs[k], 4)));
}

TEST(Barrier, GlobalIsMinAndEmptyIsInfinite) {
  std::mt19937_64 rng(10);
  const BarrierNet net(small_arch(), 6);
  std::vector<RelativeObservation> obs;
  for (int s = 0; s < 5; ++s) obs.push_back(to_object_frame(Vec2(0.02 * s, 0.01), random_history(4, rng), 4));
  double m = std::numeric_limits<double>::infinity();
  for (const auto& o : obs) m = std::min(m, net.value(o));
  EXPECT_EQ(global_barrier(net, obs), m);
  EXPECT_EQ(global_barrier(net, {}), kEmptySceneBarrier);
}

TEST(Barrier, EvaluationCounter) {
  std::mt19937_64 rng(11);
  const BarrierNet net(small_arch(), 1);
  std::vector<RelativeObservation> obs(4, to_object_frame(Vec2::Zero(), random_history(4, rng), 4));
  batched_barrier(net, obs);
  EXPECT_EQ(net.evaluation_count(), 4u);
}

TEST(Barrier, ZerosGivesZero) {
  std::mt19937_64 rng(12);
  const BarrierNet net = BarrierNet::zeros(small_arch());
  EXPECT_EQ(net.value(to_object_frame(Vec2(0.1, 0.2), random_history(4, rng), 4)), 0.0);
}

TEST(Checkpoint, RoundTripFileAndArchTag) {
  const BarrierNet net(small_arch(), 13);
  const auto path = (std::filesystem::temp_directory_path() / "dcbf_barrier_test.ckpt").string();
  net.save(path);
  const BarrierNet back = BarrierNet::load(path);
  EXPECT_EQ(back.arch(), net.arch());
  EXPECT_EQ(back.params(), net.params());
  std::remove(path.c_str());
  EXPECT_THROW(BarrierNet::load(path), MissingCheckpoint);
  EXPECT_THROW(BarrierNet::from_checkpoint(net.to_checkpoint(), small_arch(5)), VersionMismatch);
  EXPECT_THROW(BarrierNet::from_checkpoint("garbage"), CorruptCheckpoint);
}

TEST(ArchSpec, TagRoundTrip) {
  const ArchSpec a = small_arch(6);
  EXPECT_EQ(ArchSpec::from_tag(a.tag()), a);
  EXPECT_THROW(ArchSpec::from_tag("{"), CorruptCheckpoint);
}

TEST(History, WarmupBackfillsFirstFrame) {
  WorldConfig c;
  c.n_objects = 3;
  World w = World::spawn(c, 1);
  HistoryTracker tr(4, w);
  const ObjectHistory h = tr.history(0);
  ASSERT_EQ(h.entries.size(), 5u);
  for (const auto& e : h.entries) EXPECT_EQ(e, observe(w.objects()[0]));
  w.step(Action{Vec2(0.01, 0.0)});
  tr.record(w);
  EXPECT_EQ(tr.robot_path().size(), 2u);
  EXPECT_EQ(tr.previous_history(0).entries.back(), h.entries.back());
}

TEST(History, WindowsShiftByOneStep) {
  WorldConfig c;
  c.n_objects = 2;
  World w = World::spawn(c, 2);
  HistoryTracker tr(3, w);
  for (int k = 0; k < 8; ++k) {
    w.step(Action{Vec2(0.01, 0.0)});
    tr.record(w);
  }
  const ObjectHistory now = tr.history(1), prev = tr.previous_history(1);
  for (std::size_t k = 0; k + 1 < now.entries.size(); ++k) EXPECT_EQ(prev.entries[k + 1], now.entries[k]);
  EXPECT_EQ(now.latest(), observe(w.objects()[1]));
}

TEST(History, RelevanceRadiusAndMotion) {
  WorldConfig c;
  ObjectState near, far, fallen;
  near.pos = Vec2(0.15, 0.0);
  far.pos = Vec2(0.5, 0.5);
  fallen.pos = Vec2(0.05, 0.1);
  fallen.fallen = true;
  const World w = World::from_state(c, RobotState{Vec2(0.0, 0.0)}, {near, far, fallen}, {{}, {}, {}});
  HistoryTracker tr(4, w);
  EXPECT_EQ(relevant_objects(tr, RelevanceRule{0.2, 1e-4}), std::vector<int>{0});
}

}  // namespace
}  // namespace dcbf

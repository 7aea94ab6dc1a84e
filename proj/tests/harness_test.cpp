#include "dcbf/harness.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

namespace dcbf {
namespace {

WorldConfig world(int n) {
  WorldConfig c;
  c.n_objects = n;
  return c;
}

EpisodeResult make_result(bool reached, bool violated, double dist, double tilt) {
  EpisodeResult e;
  e.reached = reached;
  e.violated = violated;
  e.final_distance = dist;
  e.max_tilt_deg = tilt;
  return e;
}

TEST(Episode, EmptyWorldDoNothingReaches) {
  const EpisodeResult r = run_episode(world(0), Controller{}, 5, EpisodeConfig{});
  EXPECT_TRUE(r.reached);
  EXPECT_FALSE(r.violated);
  EXPECT_LE(r.final_distance, 0.02);
  EXPECT_EQ(r.max_tilt_deg, 0.0);
}

TEST(Episode, BlockingObjectIsViolated) {
  ObjectState o;
  o.pos = Vec2(0.0, 0.0);
  const World w = World::from_state(world(1), RobotState{Vec2(-0.3, 0.0)}, {o}, {ObjectPhys{}});
  const EpisodeResult r = run_episode(w, Controller{}, GoalSpec{Vec2(0.3, 0.0)}, EpisodeConfig{});
  EXPECT_TRUE(r.violated);
  EXPECT_GE(r.max_tilt_deg, 15.0);
  EXPECT_FALSE(r.safe_and_success());
}

TEST(Episode, SeededRunsAreIdentical) {
  Controller apf;
  apf.kind = PolicyKind::Apf;
  for (const Controller& c : {Controller{}, apf}) {
    const EpisodeResult a = run_episode(world(10), c, 77, EpisodeConfig{});
    const EpisodeResult b = run_episode(world(10), c, 77, EpisodeConfig{});
    EXPECT_EQ(a.final_distance, b.final_distance);
    EXPECT_EQ(a.max_tilt_deg, b.max_tilt_deg);
    EXPECT_EQ(a.steps_used, b.steps_used);
    EXPECT_EQ(a.violated, b.violated);
  }
}

TEST(Episode, FilteredEpisodeKeepsReports) {
  ArchSpec arch;
  arch.history_len = 8;
  arch.lstm_hidden = 8;
  arch.robot_layers = {8};
  arch.head_layers = {8};
  const BarrierNet net(arch, 1);
  Controller c;
  c.kind = PolicyKind::Dcbf;
  c.net = &net;
  EpisodeConfig cfg;
  cfg.keep_reports = true;
  cfg.step_cap = 30;
  const EpisodeResult r = run_episode(world(4), c, 3, cfg);
  EXPECT_EQ(r.reports.size(), static_cast<std::size_t>(r.steps_used + (r.stalled ? 1 : 0)));
  EXPECT_LE(r.steps_used, 30);
}

TEST(Summarize, Arithmetic) {
  const std::vector<EpisodeResult> eps{make_result(true, false, 0.01, 3.0), make_result(false, true, 0.4, 30.0)};
  const MetricsRow row = summarize("donothing", 4, eps);
  EXPECT_EQ(row.safe_rate, 0.5);
  EXPECT_EQ(row.reach_rate, 0.5);
  EXPECT_EQ(row.safe_success_rate, 0.5);
  EXPECT_NEAR(row.mean_final_distance, 0.205, 1e-15);
  ASSERT_TRUE(row.mean_max_tilt_violating.has_value());
  EXPECT_EQ(*row.mean_max_tilt_violating, 30.0);

  const std::vector<EpisodeResult> safe{make_result(true, false, 0.01, 3.0)};
  EXPECT_FALSE(summarize("x", 4, safe).mean_max_tilt_violating.has_value());
}

TEST(Experiment, TableShapeCsvAndIdempotentExport) {
  ExperimentConfig cfg;
  cfg.object_counts = {2, 3};
  cfg.episodes = 3;
  cfg.policies = {parse_policy_spec("donothing"), parse_policy_spec("apf"), parse_policy_spec("backstep")};
  const MetricsTable t = run_experiment(cfg, world(1), PolicyConfig{}, FilterConfig{});
  ASSERT_EQ(t.rows.size(), 6u);
  EXPECT_EQ(t.at("apf", 3).n_objects, 3);
  EXPECT_THROW(t.at("apf", 7), ConfigError);
  EXPECT_EQ(run_experiment(cfg, world(1), PolicyConfig{}, FilterConfig{}).rows.size(), 6u);

  const std::string csv = table_to_csv(t);
  std::istringstream is(csv);
  std::string line;
  int lines = 0;
  while (std::getline(is, line)) ++lines;
  EXPECT_EQ(lines, 7);

  const auto stem = (std::filesystem::temp_directory_path() / "dcbf_harness_table").string();
  export_table(t, stem);
  std::ifstream in1(stem + ".csv");
  const std::string first((std::istreambuf_iterator<char>(in1)), {});
  export_table(t, stem);
  std::ifstream in2(stem + ".csv");
  const std::string second((std::istreambuf_iterator<char>(in2)), {});
  EXPECT_EQ(first, second);
  EXPECT_EQ(first, csv);
  std::filesystem::remove(stem + ".csv");
  std::filesystem::remove(stem + ".json");
  EXPECT_THROW(export_table(t, "/nonexistent_dir/x"), IoError);
}

TEST(Experiment, MissingCheckpoint) {
  ExperimentConfig cfg;
  cfg.object_counts = {2};
  cfg.episodes = 1;
  cfg.policies = {parse_policy_spec("dcbf(/nonexistent/model.ckpt)")};
  EXPECT_THROW(run_experiment(cfg, world(1), PolicyConfig{}, FilterConfig{}), MissingCheckpoint);
}

TEST(PolicySpec, Parsing) {
  EXPECT_EQ(parse_policy_spec("apf").kind, PolicyKind::Apf);
  const PolicySpec d = parse_policy_spec("dcbf(ckpt/a.ckpt)");
  EXPECT_EQ(d.kind, PolicyKind::Dcbf);
  EXPECT_EQ(d.checkpoint, "ckpt/a.ckpt");
  EXPECT_EQ(d.label, "dcbf(ckpt/a.ckpt)");
  EXPECT_THROW(parse_policy_spec("dcbf"), ConfigError);
  EXPECT_THROW(parse_policy_spec("dcbf()"), ConfigError);
  EXPECT_THROW(parse_policy_spec("apf(x)"), ConfigError);
  EXPECT_THROW(parse_policy_spec("rl"), ConfigError);
}

TEST(Heatmap, GridDimensions) {
  World w = World::spawn(world(4), 2);
  const HistoryTracker tr(8, w);
  ArchSpec arch;
  arch.lstm_hidden = 4;
  arch.robot_layers = {4};
  arch.head_layers = {4};
  const Heatmap h = barrier_heatmap(BarrierNet(arch, 1), tr, w.config(), 7);
  EXPECT_EQ(h.values.rows(), 7);
  EXPECT_EQ(h.values.cols(), 7);
  const std::string csv = h.to_csv();
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 50);
  EXPECT_THROW(barrier_heatmap(BarrierNet(arch, 1), tr, w.config(), 0), ConfigError);
}

TEST(Goal, FarHalfAndClearOfObjects) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const World w = World::spawn(world(10), seed);
    const GoalSpec g = episode_goal(w, seed, 0.02);
    EXPECT_GE(g.pos.x(), 0.0);
    for (const auto& o : w.objects()) EXPECT_GT((g.pos - o.pos).norm(), 0.05 + 0.02);
    EXPECT_EQ(episode_goal(w, seed, 0.02).pos, g.pos);
  }
}

}  // namespace
}  // namespace dcbf

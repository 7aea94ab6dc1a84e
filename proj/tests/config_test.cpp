#include "dcbf/config.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

namespace dcbf {
namespace {

// The default configuration snapshot carries the published constants.
TEST(GoldenConfig, PublishedConstants) {
  const Json j = to_json(AppConfig{});
  EXPECT_EQ(j.at("threshold_deg").get<double>(), 15.0);
  EXPECT_EQ(j.at("world").at("max_step").get<double>(), 0.01);
  EXPECT_EQ(j.at("policies").at("backstep").at("trigger_deg").get<double>(), 14.0);
  EXPECT_EQ(j.at("policies").at("apf").at("kp").get<double>(), 5.0);
  EXPECT_EQ(j.at("policies").at("apf").at("eta").get<double>(), 50.0);
  EXPECT_EQ(j.at("policies").at("apf").at("influence_len").get<double>(), 1.2);
  EXPECT_EQ(j.at("policies").at("apf").at("oscillation_len").get<int>(), 3);
  EXPECT_EQ(j.at("refine").at("s").get<int>(), 4);
  EXPECT_EQ(j.at("train").at("sigma_variants").get<std::vector<double>>(), (std::vector<double>{0.01, 0.02}));
  const double sigma = j.at("train").at("sigma").get<double>();
  EXPECT_TRUE(sigma == 0.01 || sigma == 0.02);
  EXPECT_EQ(kViolationThresholdDeg, 15.0);
}

TEST(GoldenConfig, OtherDefaults) {
  const AppConfig c;
  EXPECT_EQ(c.train.gamma, 0.1);
  EXPECT_EQ(c.refine.delta, 0.1);
  EXPECT_EQ(c.train.eta_s, 1.0);
  EXPECT_EQ(c.train.eta_u, 1.0);
  EXPECT_EQ(c.train.eta_d, 0.5);
  EXPECT_EQ(c.filter.n_candidates, 64);
  EXPECT_FALSE(c.filter.decrease_mode);
  EXPECT_EQ(c.filter.fallback, Fallback::Stay);
  EXPECT_EQ(c.experiment.object_counts, (std::vector<int>{4, 10, 20, 40}));
  EXPECT_EQ(c.experiment.episodes, 100);
  EXPECT_EQ(c.experiment.step_cap, 400);
  EXPECT_EQ(c.balance.free_space_dist, 0.15);
  EXPECT_EQ(c.balance.motion_eps, 1e-4);
  EXPECT_EQ(c.policies.backstep.lookback, 5);
  EXPECT_EQ(refinement_grid(c.refine, c.world.max_step).size(), 33u);
  EXPECT_NO_THROW(c.validate());
}

TEST(Config, JsonRoundTrip) {
  AppConfig c;
  c.seed = 99;
  c.train.sigma = 0.01;
  c.refine.mode = RefineMode::UnsafeOnly;
  c.filter.decrease_mode = true;
  c.filter.fallback = Fallback::Backstep;
  c.experiment.policies = {"donothing", "dcbf(a.ckpt)"};
  c.world.n_objects = 10;
  const Json j = to_json(c);
  EXPECT_EQ(to_json(config_from_json(j)), j);
}

TEST(Config, PartialDocumentKeepsDefaults) {
  const AppConfig c = config_from_json(Json::parse(R"({"seed": 5, "train": {"sigma": 0.01}})"));
  EXPECT_EQ(c.seed, 5u);
  EXPECT_EQ(c.train.sigma, 0.01);
  EXPECT_EQ(c.train.gamma, 0.1);
}

TEST(Config, UnknownKeysAndBadTypes) {
  EXPECT_THROW(config_from_json(Json::parse(R"({"sead": 5})")), ConfigError);
  EXPECT_THROW(config_from_json(Json::parse(R"({"train": {"sigmaa": 0.1}})")), ConfigError);
  EXPECT_THROW(config_from_json(Json::parse(R"({"train": {"sigma": "big"}})")), ConfigError);
  EXPECT_THROW(config_from_json(Json::parse(R"({"collect": {"policy": "dcbf"}})")).validate(), ConfigError);
  EXPECT_THROW(config_from_json(Json::parse(R"({"refine": {"s": 0}})")).validate(), ConfigError);
}

TEST(Config, DerivedSeedsDifferPerStage) {
  AppConfig c;
  c.seed = 7;
  const auto a = c.collect_config().seed, b = c.train_config().seed, r = c.refine_config().seed,
             e = c.experiment_config().seed;
  EXPECT_NE(a, b);
  EXPECT_NE(b, r);
  EXPECT_NE(r, e);
  EXPECT_EQ(c.collect_config().seed, a);
}

TEST(Config, FileWithComments) {
  const auto path = (std::filesystem::temp_directory_path() / "dcbf_config_test.json").string();
  std::ofstream(path) << "{\n  // desk-scale run\n  \"seed\": 3,\n  \"experiment\": {\"episodes\": 10}\n}\n";
  const AppConfig c = load_config(path);
  EXPECT_EQ(c.seed, 3u);
  EXPECT_EQ(c.experiment.episodes, 10);
  std::ofstream(path) << "{ not json";
  EXPECT_THROW(load_config(path), ConfigError);
  std::filesystem::remove(path);
  EXPECT_THROW(load_config(path), ConfigError);
}

}  // namespace
}  // namespace dcbf

#pragma once

// One structured document configures every subcommand. Sections mirror the
// library config types; per-stage seeds are derived from the master seed.

#include "dcbf/barrier.hpp"
#include "dcbf/data.hpp"
#include "dcbf/filter.hpp"
#include "dcbf/harness.hpp"
#include "dcbf/serialize.hpp"
#include "dcbf/training.hpp"

#include <string>
#include <vector>

namespace dcbf {

struct CollectSettings {
  PolicyKind policy = PolicyKind::Backstep;
  int n_trajectories = 200;
  int episode_len = 150;
  int snapshot_stride = 4;
  double goal_tolerance = 0.02;

  bool operator==(const CollectSettings&) const = default;
};

struct ExperimentSettings {
  std::vector<int> object_counts{4, 10, 20, 40};
  int episodes = 100;
  std::vector<std::string> policies{"donothing", "backstep", "apf"};
  int step_cap = 400;
  int stall_limit = 50;
  double goal_tolerance = 0.02;

  bool operator==(const ExperimentSettings&) const = default;
};

struct AppConfig {
  std::uint64_t seed = 0;
  double threshold_deg = kViolationThresholdDeg;
  WorldConfig world;
  ArchSpec model;
  CollectSettings collect;
  BalanceConfig balance;
  PolicyConfig policies;
  TrainConfig train;
  std::vector<double> sigma_variants{0.01, 0.02};
  RefineConfig refine;
  FilterConfig filter;
  ExperimentSettings experiment;

  void validate() const;

  CollectConfig collect_config() const;
  TrainConfig train_config() const;
  RefineConfig refine_config() const;
  EpisodeConfig episode_config() const;
  /// Policy strings are parsed; dcbf(...) checkpoints load lazily.
  ExperimentConfig experiment_config() const;
};

Json to_json(const AppConfig& cfg);
/// Missing keys keep defaults; unknown keys and type errors raise ConfigError.
AppConfig config_from_json(const Json& j);
AppConfig load_config(const std::string& path);

}  // namespace dcbf

#pragma once

// Seeded episodes, experiment tables and plot-data export.

#include "dcbf/barrier.hpp"
#include "dcbf/filter.hpp"
#include "dcbf/policies.hpp"
#include "dcbf/sim.hpp"

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace dcbf {

struct EpisodeConfig {
  int step_cap = 400;
  int stall_limit = 50;  // consecutive Stay actions that end an episode
  double threshold_deg = kViolationThresholdDeg;
  int history_len = 8;
  double goal_tolerance = 0.02;
  bool keep_reports = false;

  void validate() const;
};

struct EpisodeResult {
  bool reached = false;
  bool violated = false;
  bool stalled = false;
  double final_distance = 0.0;
  double max_tilt_deg = 0.0;
  int steps_used = 0;
  std::uint64_t seed = 0;
  std::uint64_t evaluations = 0;
  std::vector<std::string> reports;  // per-step filter reports when kept

  bool safe_and_success() const { return reached && !violated; }
};

/// A baseline, or the filter wrapped around do-nothing when `net` is set.
struct Controller {
  PolicyKind kind = PolicyKind::DoNothing;
  PolicyConfig policy;
  const BarrierNet* net = nullptr;
  FilterConfig filter;
};

/// Runs until the goal is within tolerance, the step cap, or a stall.
EpisodeResult run_episode(World world, const Controller& ctl, const GoalSpec& goal, const EpisodeConfig& cfg);

/// Spawns the world from `seed` and draws the goal from the same seed.
EpisodeResult run_episode(const WorldConfig& world, const Controller& ctl, std::uint64_t seed,
                          const EpisodeConfig& cfg);

/// Goal for a seeded episode (shared by every policy in a cell).
GoalSpec episode_goal(const World& world, std::uint64_t seed, double tolerance);

struct PolicySpec {
  std::string label;
  PolicyKind kind = PolicyKind::DoNothing;
  std::string checkpoint;
  std::shared_ptr<const BarrierNet> net;  // preloaded; otherwise read from `checkpoint`
};

/// "donothing", "backstep", "apf" or "dcbf(path/to/ckpt)".
PolicySpec parse_policy_spec(const std::string& text);

struct ExperimentConfig {
  std::vector<int> object_counts{4, 10, 20, 40};
  int episodes = 100;
  std::vector<PolicySpec> policies;
  EpisodeConfig episode;
  std::uint64_t seed = 0;

  void validate() const;
};

struct MetricsRow {
  std::string policy;
  int n_objects = 0;
  int episodes = 0;
  double safe_rate = 0.0;
  double reach_rate = 0.0;
  double safe_success_rate = 0.0;
  double mean_final_distance = 0.0;
  std::optional<double> mean_max_tilt_violating;  // absent when nothing was violated
  std::uint64_t evaluations = 0;
};

MetricsRow summarize(const std::string& policy, int n_objects, std::span<const EpisodeResult> episodes);

struct MetricsTable {
  std::vector<MetricsRow> rows;

  const MetricsRow& at(const std::string& policy, int n_objects) const;
};

/// Every policy x object count, episodes in fixed order; every policy in a
/// cell sees the same worlds and goals. Throws MissingCheckpoint.
MetricsTable run_experiment(const ExperimentConfig& cfg, const WorldConfig& world, const PolicyConfig& policy,
                            const FilterConfig& filter);

std::string table_to_csv(const MetricsTable& table);
std::string table_to_json(const MetricsTable& table);
/// Writes <stem>.csv and <stem>.json. Throws IoError.
void export_table(const MetricsTable& table, const std::string& stem);

/// B_global of the tracked scene with the end-effector moved to each cell
/// centre of a resolution x resolution grid over the reachable table.
struct Heatmap {
  int resolution = 0;
  double lo = 0.0;
  double hi = 0.0;
  Eigen::MatrixXd values;  // row = y index, col = x index

  std::string to_csv() const;
};

Heatmap barrier_heatmap(const BarrierNet& net, const HistoryTracker& tracker, const WorldConfig& world,
                        int resolution);

void write_text_file(const std::string& path, const std::string& text);

}  // namespace dcbf

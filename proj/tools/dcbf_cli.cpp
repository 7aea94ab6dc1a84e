#include "dcbf/config.hpp"
#include "dcbf/dataset_io.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>

namespace {

using namespace dcbf;

struct Options {
  std::optional<std::uint64_t> seed;
  std::string config_path;
  bool print_config = false;

  std::string data_dir;
  std::string out;
  std::string ckpt;
  std::string policy;
  std::optional<int> n_trajectories;
  std::optional<int> episode_len;
  std::optional<int> n_objects;
  bool no_balance = false;
  std::optional<int> epochs;
  std::optional<double> sigma;
  std::optional<double> gamma;
  std::optional<double> delta;
  std::optional<int> refine_steps;
  bool decrease_mode = false;
  std::optional<int> batches;
  std::string mode;
  std::string augmented_out;
  std::vector<std::string> policies;
  std::vector<int> object_counts;
  std::optional<int> episodes;
  std::string heatmap_out;
  std::string reports_out;
  int resolution = 41;
  int warmup_steps = 0;
};

AppConfig effective_config(const Options& o) {
  AppConfig c = o.config_path.empty() ? AppConfig{} : load_config(o.config_path);
  if (o.seed) c.seed = *o.seed;
  if (o.n_trajectories) c.collect.n_trajectories = *o.n_trajectories;
  if (o.episode_len) c.collect.episode_len = *o.episode_len;
  if (o.n_objects) c.world.n_objects = *o.n_objects;
  if (!o.policy.empty()) c.collect.policy = policy_from_name(o.policy);
  if (o.epochs) c.train.epochs = *o.epochs;
  if (o.sigma) c.train.sigma = *o.sigma;
  if (o.gamma) c.train.gamma = c.filter.gamma = *o.gamma;
  if (o.delta) c.refine.delta = *o.delta;
  if (o.refine_steps) c.refine.s = *o.refine_steps;
  if (o.decrease_mode) c.filter.decrease_mode = true;
  if (o.batches) c.refine.n_batches = *o.batches;
  if (!o.mode.empty()) c.refine.mode = refine_mode_from_name(o.mode);
  if (!o.policies.empty()) c.experiment.policies = o.policies;
  if (!o.object_counts.empty()) c.experiment.object_counts = o.object_counts;
  if (o.episodes) c.experiment.episodes = *o.episodes;
  c.validate();
  return c;
}

void require(const std::string& value, const char* flag) {
  if (value.empty()) throw ConfigError(std::string(flag) + " is required");
}

// "ckpt/" or an existing directory gets a file name inside it.
std::string checkpoint_path(const std::string& out) {
  namespace fs = std::filesystem;
  if (out.back() != '/' && !fs::is_directory(out)) return out;
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw IoError("cannot create " + out + ": " + ec.message());
  return (fs::path(out) / "barrier.ckpt").string();
}

int cmd_collect(const Options& o) {
  require(o.out, "--out");
  const AppConfig c = effective_config(o);
  Dataset ds = collect(c.collect_config(), c.world);
  const std::size_t raw = ds.records.size();
  if (!o.no_balance) ds = balance(ds, c.balance);
  save_dataset(ds, o.out);
  std::printf("collected %zu trajectories, %zu records (%zu before balancing): %llu safe, %llu unsafe\n",
              ds.trajectories.size(), ds.records.size(), raw, static_cast<unsigned long long>(ds.manifest.n_safe),
              static_cast<unsigned long long>(ds.manifest.n_unsafe));
  return 0;
}

int cmd_train(const Options& o) {
  require(o.data_dir, "--data");
  require(o.out, "--out");
  const AppConfig c = effective_config(o);
  const Dataset ds = load_dataset(o.data_dir);
  if (ds.manifest.history_len != c.model.history_len) throw ConfigError("dataset history length differs from model");
  TrainResult r = train_initial(ds, c.train_config(), c.model, nullptr,
                                [](const EpochLog& e) { std::cout << e.to_text() << std::endl; });
  const std::string path = checkpoint_path(o.out);
  r.net.save(path);
  std::cout << "wrote " << path << "\n";
  return 0;
}

int cmd_refine(const Options& o) {
  require(o.data_dir, "--data");
  require(o.ckpt, "--ckpt");
  require(o.out, "--out");
  const AppConfig c = effective_config(o);
  Dataset ds = load_dataset(o.data_dir);
  const BarrierNet initial = BarrierNet::load(o.ckpt);
  const RefineResult r = refine_loop(initial, ds, c.refine_config(), c.train_config(),
                                     [](const RefineBatchLog& b) { std::cout << b.to_text() << std::endl; });
  const std::string path = checkpoint_path(o.out);
  r.net.save(path);
  std::cout << "wrote " << path << "\n";
  if (!o.augmented_out.empty()) save_dataset(ds, o.augmented_out);
  return 0;
}

int cmd_eval(const Options& o) {
  const AppConfig c = effective_config(o);
  const MetricsTable t = run_experiment(c.experiment_config(), c.world, c.policies, c.filter);
  std::cout << table_to_csv(t);
  if (!o.out.empty()) export_table(t, o.out);
  return 0;
}

// One seeded episode of the filtered controller, printing every filter report.
int cmd_demo(const Options& o) {
  require(o.ckpt, "--ckpt");
  const AppConfig c = effective_config(o);
  const BarrierNet net = BarrierNet::load(o.ckpt);
  Controller ctl;
  ctl.kind = PolicyKind::Dcbf;
  ctl.policy = c.policies;
  ctl.net = &net;
  ctl.filter = c.filter;
  EpisodeConfig ep = c.episode_config();
  ep.keep_reports = true;

  World w = World::spawn(c.world, c.seed);
  const GoalSpec goal = episode_goal(w, c.seed, ep.goal_tolerance);
  const EpisodeResult r = run_episode(w, ctl, goal, ep);

  std::string reports;
  for (const auto& line : r.reports) reports += line + "\n";
  if (o.reports_out.empty()) {
    std::cout << reports;
  } else {
    write_text_file(o.reports_out, reports);
  }
  std::printf("reached=%d violated=%d stalled=%d steps=%d final_distance=%.4f max_tilt_deg=%.3f evaluations=%llu\n",
              r.reached, r.violated, r.stalled, r.steps_used, r.final_distance, r.max_tilt_deg,
              static_cast<unsigned long long>(r.evaluations));
  if (!o.heatmap_out.empty()) {
    HistoryTracker tracker(c.model.history_len, w);
    write_text_file(o.heatmap_out, barrier_heatmap(net, tracker, c.world, o.resolution).to_csv());
  }
  return 0;
}

int cmd_inspect(const Options& o) {
  require(o.data_dir, "--data");
  const Dataset ds = load_dataset(o.data_dir);
  std::size_t refined = 0;
  for (const auto& t : ds.trajectories) refined += t.parent >= 0 ? 1 : 0;
  std::size_t fallen = 0;
  for (const auto& r : ds.records) fallen += r.current_fallen() ? 1 : 0;
  Json j{{"policy", ds.manifest.policy},
         {"history_len", ds.manifest.history_len},
         {"n_objects", ds.manifest.world.n_objects},
         {"seed", ds.manifest.seed},
         {"episode_len", ds.manifest.episode_len},
         {"threshold_deg", ds.manifest.threshold_deg},
         {"trajectories", ds.trajectories.size()},
         {"refined_trajectories", refined},
         {"snapshots", ds.snapshots.size()},
         {"records", ds.records.size()},
         {"safe", ds.manifest.n_safe},
         {"unsafe", ds.manifest.n_unsafe},
         {"fallen_records", fallen}};
  std::cout << j.dump(2) << "\n";
  return 0;
}

// B_global over the table for a seeded scene after `warmup` do-nothing steps.
int cmd_heatmap(const Options& o) {
  require(o.ckpt, "--ckpt");
  require(o.out, "--out");
  const AppConfig c = effective_config(o);
  const BarrierNet net = BarrierNet::load(o.ckpt);
  World w = World::spawn(c.world, c.seed);
  HistoryTracker tracker(c.model.history_len, w);
  const GoalSpec goal = episode_goal(w, c.seed, c.experiment.goal_tolerance);
  for (int k = 0; k < o.warmup_steps; ++k) {
    w.step(do_nothing_policy(w.robot(), goal, c.world.max_step));
    tracker.record(w);
  }
  write_text_file(o.out, barrier_heatmap(net, tracker, c.world, o.resolution).to_csv());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Learned barrier-function safety filter for tabletop pushing"};
  app.require_subcommand(1);
  app.fallthrough();
  Options o;
  app.add_option("--seed", o.seed, "Master seed");
  app.add_option("--config", o.config_path, "JSON config file")->check(CLI::ExistingFile);
  app.add_flag("--print-config", o.print_config, "Print the effective config and exit");

  auto* collect_cmd = app.add_subcommand("collect", "Roll out a baseline and write a labeled dataset");
  collect_cmd->add_option("--out", o.out, "Dataset directory");
  collect_cmd->add_option("--policy", o.policy, "donothing | backstep | apf");
  collect_cmd->add_option("--n-traj,--trajectories", o.n_trajectories);
  collect_cmd->add_option("--episode-len", o.episode_len);
  collect_cmd->add_option("--objects", o.n_objects);
  collect_cmd->add_flag("--no-balance", o.no_balance, "Keep free-space records");

  auto* train_cmd = app.add_subcommand("train", "Train a barrier network on a dataset");
  train_cmd->add_option("--data", o.data_dir);
  train_cmd->add_option("--out", o.out, "Checkpoint file, or a directory ending in /");
  train_cmd->add_option("--epochs", o.epochs);
  train_cmd->add_option("--sigma", o.sigma);
  train_cmd->add_option("--gamma", o.gamma);

  auto* refine_cmd = app.add_subcommand("refine", "Boundary refinement with warm-started fine-tuning");
  refine_cmd->add_option("--data", o.data_dir);
  refine_cmd->add_option("--ckpt", o.ckpt, "Initial checkpoint");
  refine_cmd->add_option("--out", o.out, "Refined checkpoint file, or a directory ending in /");
  refine_cmd->add_option("--batches", o.batches);
  refine_cmd->add_option("--delta", o.delta, "Boundary band |B| <= delta");
  refine_cmd->add_option("--s", o.refine_steps, "Safest-control steps per sample");
  refine_cmd->add_option("--mode", o.mode, "both-sides | unsafe-only | safe-only");
  refine_cmd->add_option("--save-data", o.augmented_out, "Write the augmented dataset here");
  refine_cmd->add_option("--sigma", o.sigma);

  auto* eval_cmd = app.add_subcommand("eval", "Seeded episodes per policy and object count");
  eval_cmd->add_option("--policy", o.policies, "donothing | backstep | apf | dcbf(ckpt); repeatable");
  eval_cmd->add_option("--objects", o.object_counts, "Object counts; repeatable");
  eval_cmd->add_option("--episodes", o.episodes);
  eval_cmd->add_option("--out", o.out, "Write <out>.csv and <out>.json");
  eval_cmd->add_flag("--decrease-mode", o.decrease_mode, "Filter also enforces the decrease condition");

  auto* demo_cmd = app.add_subcommand("demo", "One filtered episode with per-step reports");
  demo_cmd->add_option("--ckpt", o.ckpt);
  demo_cmd->add_option("--objects", o.n_objects);
  demo_cmd->add_option("--reports", o.reports_out, "Write reports here instead of stdout");
  demo_cmd->add_option("--heatmap", o.heatmap_out, "Write a B_global grid of the initial scene");
  demo_cmd->add_option("--resolution", o.resolution);
  demo_cmd->add_flag("--decrease-mode", o.decrease_mode, "Filter also enforces the decrease condition");

  auto* inspect_cmd = app.add_subcommand("inspect-dataset", "Validate a dataset and print its summary");
  inspect_cmd->add_option("--data", o.data_dir);

  auto* heat_cmd = app.add_subcommand("heatmap", "B_global grid over end-effector positions");
  heat_cmd->add_option("--ckpt", o.ckpt);
  heat_cmd->add_option("--out", o.out, "CSV path");
  heat_cmd->add_option("--objects", o.n_objects);
  heat_cmd->add_option("--resolution", o.resolution);
  heat_cmd->add_option("--warmup", o.warmup_steps, "Do-nothing steps before sampling");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (o.print_config) {
      std::cout << to_json(effective_config(o)).dump(2) << "\n";
      return 0;
    }
    if (collect_cmd->parsed()) return cmd_collect(o);
    if (train_cmd->parsed()) return cmd_train(o);
    if (refine_cmd->parsed()) return cmd_refine(o);
    if (eval_cmd->parsed()) return cmd_eval(o);
    if (demo_cmd->parsed()) return cmd_demo(o);
    if (inspect_cmd->parsed()) return cmd_inspect(o);
    if (heat_cmd->parsed()) return cmd_heatmap(o);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

#include "dcbf/config.hpp"

#include <fstream>
#include <sstream>

namespace dcbf {
namespace {

using json_detail::get_opt;
using json_detail::reject_unknown;

enum SeedStream : std::uint64_t { kCollectSeed = 1, kTrainSeed = 2, kRefineSeed = 3, kExperimentSeed = 4 };

std::string_view fallback_name(Fallback f) { return f == Fallback::Stay ? "stay" : "backstep"; }

Fallback fallback_from_name(const std::string& s) {
  if (s == "stay") return Fallback::Stay;
  if (s == "backstep") return Fallback::Backstep;
  throw ConfigError("unknown fallback: " + s);
}

Json relevance_json(const RelevanceRule& r) { return Json{{"radius", r.radius}, {"motion_eps", r.motion_eps}}; }

void read_relevance(const Json& j, RelevanceRule& r, std::string_view what) {
  reject_unknown(j, {"radius", "motion_eps"}, what);
  get_opt(j, "radius", r.radius);
  get_opt(j, "motion_eps", r.motion_eps);
}

Json backstep_json(const BackstepConfig& b) { return Json{{"trigger_deg", b.trigger_deg}, {"lookback", b.lookback}}; }

void read_backstep(const Json& j, BackstepConfig& b, std::string_view what) {
  reject_unknown(j, {"trigger_deg", "lookback"}, what);
  get_opt(j, "trigger_deg", b.trigger_deg);
  get_opt(j, "lookback", b.lookback);
}

Json model_json(const ArchSpec& a) {
  return Json{{"history_len", a.history_len},
              {"lstm_hidden", a.lstm_hidden},
              {"robot_layers", a.robot_layers},
              {"head_layers", a.head_layers},
              {"activation", std::string(nn::activation_name(a.activation))},
              {"position_scale", a.position_scale},
              {"z_scale", a.z_scale},
              {"theta_scale", a.theta_scale}};
}

void read_model(const Json& j, ArchSpec& a) {
  reject_unknown(j,
                 {"history_len", "lstm_hidden", "robot_layers", "head_layers", "activation", "position_scale",
                  "z_scale", "theta_scale"},
                 "model");
  get_opt(j, "history_len", a.history_len);
  get_opt(j, "lstm_hidden", a.lstm_hidden);
  get_opt(j, "robot_layers", a.robot_layers);
  get_opt(j, "head_layers", a.head_layers);
  if (auto it = j.find("activation"); it != j.end()) a.activation = nn::activation_from_name(it->get<std::string>());
  get_opt(j, "position_scale", a.position_scale);
  get_opt(j, "z_scale", a.z_scale);
  get_opt(j, "theta_scale", a.theta_scale);
}

AppConfig parse(const Json& j) {
  AppConfig c;
  reject_unknown(j,
                 {"seed", "threshold_deg", "world", "model", "collect", "balance", "policies", "train", "refine",
                  "filter", "experiment"},
                 "config");
  get_opt(j, "seed", c.seed);
  get_opt(j, "threshold_deg", c.threshold_deg);
  get_opt(j, "world", c.world);
  if (auto it = j.find("model"); it != j.end()) read_model(*it, c.model);

  if (auto it = j.find("collect"); it != j.end()) {
    const Json& s = *it;
    reject_unknown(s, {"policy", "n_trajectories", "episode_len", "snapshot_stride", "goal_tolerance"}, "collect");
    if (auto p = s.find("policy"); p != s.end()) c.collect.policy = policy_from_name(p->get<std::string>());
    get_opt(s, "n_trajectories", c.collect.n_trajectories);
    get_opt(s, "episode_len", c.collect.episode_len);
    get_opt(s, "snapshot_stride", c.collect.snapshot_stride);
    get_opt(s, "goal_tolerance", c.collect.goal_tolerance);
  }
  if (auto it = j.find("balance"); it != j.end()) {
    reject_unknown(*it, {"free_space_dist", "motion_eps"}, "balance");
    get_opt(*it, "free_space_dist", c.balance.free_space_dist);
    get_opt(*it, "motion_eps", c.balance.motion_eps);
  }
  if (auto it = j.find("policies"); it != j.end()) {
    const Json& s = *it;
    reject_unknown(s, {"apf", "backstep", "relevance"}, "policies");
    if (auto a = s.find("apf"); a != s.end()) {
      reject_unknown(*a, {"kp", "eta", "influence_len", "oscillation_len", "oscillation_tol"}, "policies.apf");
      get_opt(*a, "kp", c.policies.apf.kp);
      get_opt(*a, "eta", c.policies.apf.eta);
      get_opt(*a, "influence_len", c.policies.apf.influence_len);
      get_opt(*a, "oscillation_len", c.policies.apf.oscillation_len);
      get_opt(*a, "oscillation_tol", c.policies.apf.oscillation_tol);
    }
    if (auto b = s.find("backstep"); b != s.end()) read_backstep(*b, c.policies.backstep, "policies.backstep");
    if (auto r = s.find("relevance"); r != s.end()) read_relevance(*r, c.policies.relevance, "policies.relevance");
  }
  if (auto it = j.find("train"); it != j.end()) {
    const Json& s = *it;
    reject_unknown(s,
                   {"gamma", "sigma", "margin", "sigma_variants", "eta_s", "eta_u", "eta_d", "lr", "batch_size", "epochs",
                    "holdout_modulus", "skip_fallen_decrease"},
                   "train");
    get_opt(s, "gamma", c.train.gamma);
    get_opt(s, "sigma", c.train.sigma);
    get_opt(s, "margin", c.train.margin);
    get_opt(s, "sigma_variants", c.sigma_variants);
    get_opt(s, "eta_s", c.train.eta_s);
    get_opt(s, "eta_u", c.train.eta_u);
    get_opt(s, "eta_d", c.train.eta_d);
    get_opt(s, "lr", c.train.lr);
    get_opt(s, "batch_size", c.train.batch_size);
    get_opt(s, "epochs", c.train.epochs);
    get_opt(s, "holdout_modulus", c.train.holdout_modulus);
    get_opt(s, "skip_fallen_decrease", c.train.skip_fallen_decrease);
  }
  if (auto it = j.find("refine"); it != j.end()) {
    const Json& s = *it;
    reject_unknown(s,
                   {"delta", "s", "n_batches", "mode", "grid_directions", "grid_scales", "max_samples_per_batch",
                    "finetune_epochs", "max_extra_epochs", "finetune_lr"},
                   "refine");
    get_opt(s, "delta", c.refine.delta);
    get_opt(s, "s", c.refine.s);
    get_opt(s, "n_batches", c.refine.n_batches);
    if (auto m = s.find("mode"); m != s.end()) c.refine.mode = refine_mode_from_name(m->get<std::string>());
    get_opt(s, "grid_directions", c.refine.grid_directions);
    get_opt(s, "grid_scales", c.refine.grid_scales);
    get_opt(s, "max_samples_per_batch", c.refine.max_samples_per_batch);
    get_opt(s, "finetune_epochs", c.refine.finetune_epochs);
    get_opt(s, "max_extra_epochs", c.refine.max_extra_epochs);
    get_opt(s, "finetune_lr", c.refine.finetune_lr);
  }
  if (auto it = j.find("filter"); it != j.end()) {
    const Json& s = *it;
    reject_unknown(s, {"n_candidates", "ring_scales", "relevance", "decrease_mode", "gamma", "fallback", "backstep"},
                   "filter");
    get_opt(s, "n_candidates", c.filter.n_candidates);
    get_opt(s, "ring_scales", c.filter.ring_scales);
    if (auto r = s.find("relevance"); r != s.end()) read_relevance(*r, c.filter.relevance, "filter.relevance");
    get_opt(s, "decrease_mode", c.filter.decrease_mode);
    get_opt(s, "gamma", c.filter.gamma);
    if (auto f = s.find("fallback"); f != s.end()) c.filter.fallback = fallback_from_name(f->get<std::string>());
    if (auto b = s.find("backstep"); b != s.end()) read_backstep(*b, c.filter.backstep, "filter.backstep");
  }
  if (auto it = j.find("experiment"); it != j.end()) {
    const Json& s = *it;
    reject_unknown(s, {"object_counts", "episodes", "policies", "step_cap", "stall_limit", "goal_tolerance"},
                   "experiment");
    get_opt(s, "object_counts", c.experiment.object_counts);
    get_opt(s, "episodes", c.experiment.episodes);
    get_opt(s, "policies", c.experiment.policies);
    get_opt(s, "step_cap", c.experiment.step_cap);
    get_opt(s, "stall_limit", c.experiment.stall_limit);
    get_opt(s, "goal_tolerance", c.experiment.goal_tolerance);
  }
  return c;
}

}  // namespace

void AppConfig::validate() const {
  world.validate();
  if (!(threshold_deg > 0.0)) throw ConfigError("threshold_deg must be positive");
  if (model.history_len < 1 || model.lstm_hidden < 1) throw ConfigError("model: sizes must be positive");
  for (int w : model.robot_layers) {
    if (w < 1) throw ConfigError("model: layer widths must be positive");
  }
  for (int w : model.head_layers) {
    if (w < 1) throw ConfigError("model: layer widths must be positive");
  }
  if (collect.n_trajectories < 0 || collect.episode_len < 0 || collect.snapshot_stride < 1 ||
      !(collect.goal_tolerance > 0.0)) {
    throw ConfigError("collect: bad counts or tolerance");
  }
  if (collect.policy == PolicyKind::Dcbf) throw ConfigError("collect: policy must be a baseline");
  if (!(balance.free_space_dist > 0.0) || !(balance.motion_eps > 0.0)) throw ConfigError("balance: must be positive");
  policies.apf.validate();
  if (!(policies.relevance.radius > 0.0)) throw ConfigError("policies.relevance: radius must be positive");
  train.validate();
  if (sigma_variants.empty()) throw ConfigError("train: sigma_variants must not be empty");
  for (double s : sigma_variants) {
    if (!(s >= 0.0)) throw ConfigError("train: sigma_variants must be non-negative");
  }
  refine.validate();
  filter.validate();
  experiment_config().validate();
}

CollectConfig AppConfig::collect_config() const {
  CollectConfig c;
  c.policy = collect.policy;
  c.policy_cfg = policies;
  c.n_trajectories = collect.n_trajectories;
  c.episode_len = collect.episode_len;
  c.history_len = model.history_len;
  c.snapshot_stride = collect.snapshot_stride;
  c.goal_tolerance = collect.goal_tolerance;
  c.threshold_deg = threshold_deg;
  c.seed = derive_seed(seed, kCollectSeed);
  return c;
}

TrainConfig AppConfig::train_config() const {
  TrainConfig t = train;
  t.seed = derive_seed(seed, kTrainSeed);
  return t;
}

RefineConfig AppConfig::refine_config() const {
  RefineConfig r = refine;
  r.seed = derive_seed(seed, kRefineSeed);
  return r;
}

EpisodeConfig AppConfig::episode_config() const {
  EpisodeConfig e;
  e.step_cap = experiment.step_cap;
  e.stall_limit = experiment.stall_limit;
  e.threshold_deg = threshold_deg;
  e.history_len = model.history_len;
  e.goal_tolerance = experiment.goal_tolerance;
  return e;
}

ExperimentConfig AppConfig::experiment_config() const {
  ExperimentConfig e;
  e.object_counts = experiment.object_counts;
  e.episodes = experiment.episodes;
  for (const auto& p : experiment.policies) e.policies.push_back(parse_policy_spec(p));
  e.episode = episode_config();
  e.seed = derive_seed(seed, kExperimentSeed);
  return e;
}

Json to_json(const AppConfig& c) {
  return Json{
      {"seed", c.seed},
      {"threshold_deg", c.threshold_deg},
      {"world", c.world},
      {"model", model_json(c.model)},
      {"collect",
       {{"policy", std::string(policy_name(c.collect.policy))},
        {"n_trajectories", c.collect.n_trajectories},
        {"episode_len", c.collect.episode_len},
        {"snapshot_stride", c.collect.snapshot_stride},
        {"goal_tolerance", c.collect.goal_tolerance}}},
      {"balance", {{"free_space_dist", c.balance.free_space_dist}, {"motion_eps", c.balance.motion_eps}}},
      {"policies",
       {{"apf",
         {{"kp", c.policies.apf.kp},
          {"eta", c.policies.apf.eta},
          {"influence_len", c.policies.apf.influence_len},
          {"oscillation_len", c.policies.apf.oscillation_len},
          {"oscillation_tol", c.policies.apf.oscillation_tol}}},
        {"backstep", backstep_json(c.policies.backstep)},
        {"relevance", relevance_json(c.policies.relevance)}}},
      {"train",
       {{"gamma", c.train.gamma},
        {"sigma", c.train.sigma},
        {"margin", c.train.margin},
        {"sigma_variants", c.sigma_variants},
        {"eta_s", c.train.eta_s},
        {"eta_u", c.train.eta_u},
        {"eta_d", c.train.eta_d},
        {"lr", c.train.lr},
        {"batch_size", c.train.batch_size},
        {"epochs", c.train.epochs},
        {"holdout_modulus", c.train.holdout_modulus},
        {"skip_fallen_decrease", c.train.skip_fallen_decrease}}},
      {"refine",
       {{"delta", c.refine.delta},
        {"s", c.refine.s},
        {"n_batches", c.refine.n_batches},
        {"mode", std::string(refine_mode_name(c.refine.mode))},
        {"grid_directions", c.refine.grid_directions},
        {"grid_scales", c.refine.grid_scales},
        {"max_samples_per_batch", c.refine.max_samples_per_batch},
        {"finetune_epochs", c.refine.finetune_epochs},
        {"max_extra_epochs", c.refine.max_extra_epochs},
        {"finetune_lr", c.refine.finetune_lr}}},
      {"filter",
       {{"n_candidates", c.filter.n_candidates},
        {"ring_scales", c.filter.ring_scales},
        {"relevance", relevance_json(c.filter.relevance)},
        {"decrease_mode", c.filter.decrease_mode},
        {"gamma", c.filter.gamma},
        {"fallback", std::string(fallback_name(c.filter.fallback))},
        {"backstep", backstep_json(c.filter.backstep)}}},
      {"experiment",
       {{"object_counts", c.experiment.object_counts},
        {"episodes", c.experiment.episodes},
        {"policies", c.experiment.policies},
        {"step_cap", c.experiment.step_cap},
        {"stall_limit", c.experiment.stall_limit},
        {"goal_tolerance", c.experiment.goal_tolerance}}},
  };
}

AppConfig config_from_json(const Json& j) {
  AppConfig c;
  try {
    c = parse(j);
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

AppConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  Json j;
  try {
    j = Json::parse(ss.str(), nullptr, true, true);
  } catch (const Json::exception& e) {
    throw ConfigError("config " + path + ": " + e.what());
  }
  return config_from_json(j);
}

}  // namespace dcbf

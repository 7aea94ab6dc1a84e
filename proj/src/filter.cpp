#include "dcbf/filter.hpp"

#include "dcbf/serialize.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace dcbf {

void FilterConfig::validate() const {
  if (n_candidates < 1) throw ConfigError("filter: n_candidates must be at least 1");
  if (!(relevance.radius > 0.0)) throw ConfigError("filter: relevance_radius must be positive");
  if (ring_scales.empty()) throw ConfigError("filter: at least one ring is required");
  if (!(gamma > 0.0 && gamma <= 1.0)) throw ConfigError("filter: gamma must lie in (0, 1]");
}

std::vector<Action> filter_candidates(const Action& u_nom, const FilterConfig& cfg, double max_step) {
  std::vector<Action> out{Action::stay()};
  const int rings = static_cast<int>(cfg.ring_scales.size());
  const int per_ring = std::max(1, cfg.n_candidates / rings);
  for (double scale : cfg.ring_scales) {
    for (int k = 0; k < per_ring; ++k) {
      const double phi = 2.0 * std::numbers::pi * k / per_ring;
      const Vec2 u = u_nom.delta + scale * max_step * Vec2(std::cos(phi), std::sin(phi));
      const Action a{clamp_norm(u, max_step)};
      if (std::find(out.begin(), out.end(), a) == out.end()) out.push_back(a);
    }
  }
  return out;
}

std::vector<int> relevant_objects(const HistoryTracker& tracker, const FilterConfig& cfg) {
  return relevant_objects(tracker, cfg.relevance);
}

int choose_candidate(std::span<const Action> candidates, std::span<const double> values, const Action& u_nom,
                     double threshold) {
  if (candidates.size() != values.size()) throw ShapeMismatch("choose_candidate: one value per candidate");
  int chosen = -1;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    if (!(values[c] >= threshold)) continue;
    const double d = (candidates[c].delta - u_nom.delta).norm();
    if (d < best) {
      best = d;
      chosen = static_cast<int>(c);
    }
  }
  return chosen;
}

std::vector<double> global_values(const BarrierNet& net, const HistoryTracker& tracker,
                                  const std::vector<int>& objects, std::span<const Vec2> robot_nexts) {
  std::vector<double> out(robot_nexts.size(), kEmptySceneBarrier);
  if (objects.empty()) return out;
  std::vector<ObjectHistory> hist;
  hist.reserve(objects.size());
  for (int k : objects) hist.push_back(tracker.history(k));
  const Eigen::MatrixXd v = net.pair_values(hist, robot_nexts);
  for (Eigen::Index c = 0; c < v.rows(); ++c) out[c] = v.row(c).minCoeff();
  return out;
}

std::string FilterReport::to_text() const {
  auto finite_or_null = [](double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); };
  Json cands = Json::array();
  for (const auto& a : candidates) cands.push_back(a.delta);
  Json values = Json::array();
  for (double v : candidate_values) values.push_back(finite_or_null(v));
  return Json{{"relevant", relevant},
              {"threshold", threshold},
              {"current_value", finite_or_null(current_value)},
              {"nominal_value", finite_or_null(nominal_value)},
              {"nominal_passed", nominal_passed},
              {"candidates", cands},
              {"candidate_values", values},
              {"chosen", chosen},
              {"no_safe_action", no_safe_action},
              {"chosen_value", finite_or_null(chosen_value)},
              {"candidates_evaluated", candidates_evaluated},
              {"evaluations", evaluations}}
      .dump();
}

FilterResult filter(const BarrierNet& net, const HistoryTracker& tracker, const Action& u_nom,
                    const FilterConfig& cfg, const WorldConfig& world) {
  FilterResult res{u_nom, {}};
  FilterReport& rep = res.report;
  rep.relevant = relevant_objects(tracker, cfg);
  if (rep.relevant.empty()) return res;
  const auto k = static_cast<std::uint64_t>(rep.relevant.size());
  const Vec2 robot = tracker.latest().robot;

  if (cfg.decrease_mode) {
    std::vector<RelativeObservation> now;
    for (int i : rep.relevant) now.push_back(to_object_frame(robot, tracker.previous_history(i), tracker.history_len()));
    rep.current_value = global_barrier(net, now);
    rep.threshold = std::max(0.0, (1.0 - cfg.gamma) * rep.current_value);
  }

  const Vec2 nominal_next = kinematic_next(robot, u_nom, world);
  rep.nominal_value = global_values(net, tracker, rep.relevant, std::span(&nominal_next, 1))[0];
  rep.candidates_evaluated = 1;
  if (rep.nominal_value >= rep.threshold) {
    rep.chosen_value = rep.nominal_value;
    rep.evaluations = rep.candidates_evaluated * k;
    return res;
  }

  rep.nominal_passed = false;
  rep.candidates = filter_candidates(u_nom, cfg, world.max_step);
  std::vector<Vec2> nexts;
  nexts.reserve(rep.candidates.size());
  for (const auto& a : rep.candidates) nexts.push_back(kinematic_next(robot, a, world));
  rep.candidate_values = global_values(net, tracker, rep.relevant, nexts);
  rep.candidates_evaluated += rep.candidates.size();
  rep.evaluations = rep.candidates_evaluated * k;

  rep.chosen = choose_candidate(rep.candidates, rep.candidate_values, u_nom, rep.threshold);
  if (rep.chosen >= 0) {
    res.action = rep.candidates[rep.chosen];
    rep.chosen_value = rep.candidate_values[rep.chosen];
    return res;
  }

  rep.no_safe_action = true;
  rep.chosen_value = rep.candidate_values.empty() ? kEmptySceneBarrier : rep.candidate_values[0];
  if (cfg.fallback == Fallback::Stay) {
    res.action = Action::stay();
  } else {
    res.action = back_stepping_policy(RobotState{robot}, GoalSpec{robot}, std::numeric_limits<double>::infinity(),
                                      tracker.robot_path(), cfg.backstep, world.max_step);
  }
  return res;
}

}  // namespace dcbf

#pragma once

// Sampling safety filter around a nominal action.
//
// The nominal action passes untouched when the predicted next scene has
// B_global >= threshold, where threshold is 0 or, in decrease mode,
// max(0, (1 - gamma) * B_global(now)). Otherwise the closest candidate that
// passes is returned; when none does, the fallback is applied.

#include "dcbf/barrier.hpp"
#include "dcbf/history.hpp"
#include "dcbf/policies.hpp"
#include "dcbf/sim.hpp"

#include <string>
#include <vector>

namespace dcbf {

enum class Fallback { Stay, Backstep };

struct FilterConfig {
  int n_candidates = 64;  // spread evenly over the rings
  std::vector<double> ring_scales{0.25, 0.5, 1.0, 2.0};  // multiples of max_step
  RelevanceRule relevance;
  bool decrease_mode = false;
  double gamma = 0.1;
  Fallback fallback = Fallback::Stay;
  BackstepConfig backstep;

  void validate() const;
};

/// Stay first, then ring samples u_nom + scale * max_step * (cos, sin),
/// each clamped to max_step; exact duplicates are dropped.
std::vector<Action> filter_candidates(const Action& u_nom, const FilterConfig& cfg, double max_step);

std::vector<int> relevant_objects(const HistoryTracker& tracker, const FilterConfig& cfg);

/// Index of the candidate closest to u_nom among those with value >= threshold
/// (lowest index on ties), or -1 when none qualifies.
int choose_candidate(std::span<const Action> candidates, std::span<const double> values, const Action& u_nom,
                     double threshold);

struct FilterReport {
  std::vector<int> relevant;
  double threshold = 0.0;
  double current_value = kEmptySceneBarrier;  // decrease mode only
  double nominal_value = kEmptySceneBarrier;
  bool nominal_passed = true;
  std::vector<Action> candidates;
  std::vector<double> candidate_values;  // B_global per candidate
  int chosen = -1;                       // candidate index; -1 = nominal
  bool no_safe_action = false;
  double chosen_value = kEmptySceneBarrier;
  std::uint64_t candidates_evaluated = 0;  // includes the nominal check
  std::uint64_t evaluations = 0;           // candidates_evaluated x |relevant|

  /// One JSON object on a single line.
  std::string to_text() const;
};

struct FilterResult {
  Action action;
  FilterReport report;
};

FilterResult filter(const BarrierNet& net, const HistoryTracker& tracker, const Action& u_nom,
                    const FilterConfig& cfg, const WorldConfig& world);

/// B_global at each robot position for the current windows of `objects`.
std::vector<double> global_values(const BarrierNet& net, const HistoryTracker& tracker,
                                  const std::vector<int>& objects, std::span<const Vec2> robot_nexts);

}  // namespace dcbf

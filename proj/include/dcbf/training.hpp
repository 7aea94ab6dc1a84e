#pragma once

// Offline barrier training and boundary refinement.
//
// Losses over a batch of transition pairs (current = (r^t, O^{t-1}),
// next = (r^{t+1}, O^t)):
//
//   L_s = mean over current-safe pairs   of [m - B(current)]+
//   L_u = mean over current-unsafe pairs of [m + B(current)]+
//   L_d = mean over pairs of [(1 - gamma) B(current) - B(next) + sigma]+
//   L   = eta_s L_s + eta_u L_u + eta_d L_d
//
// The classification margin m defaults to 0. A positive m keeps unsafe values
// away from 0, where the decrease term otherwise parks them.
//
// With `skip_fallen_decrease`, pairs whose object has already fallen are left
// out of L_d: nothing can bring such an object back, and no barrier value
// satisfies both L_u and the decrease condition on a state that never
// changes.

#include "dcbf/barrier.hpp"
#include "dcbf/data.hpp"
#include "dcbf/history.hpp"
#include "dcbf/nn.hpp"

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace dcbf {

struct TrainConfig {
  double gamma = 0.1;
  double sigma = 0.02;
  double margin = 0.0;
  double eta_s = 1.0;
  double eta_u = 1.0;
  double eta_d = 0.5;
  double lr = 1e-3;
  int batch_size = 128;
  int epochs = 10;
  std::uint64_t seed = 0;
  int holdout_modulus = 10;  // original trajectories with id % m == m-1 are held out
  bool skip_fallen_decrease = true;

  void validate() const;
};

struct LossTerms {
  double l_s = 0.0;
  double l_u = 0.0;
  double l_d = 0.0;
  double total = 0.0;
  std::size_t n_safe = 0;
  std::size_t n_unsafe = 0;
  std::size_t n_decrease = 0;
};

/// Forward (and, when `grads` is given, backward) over one batch.
/// Throws ShapeMismatch on an empty batch.
LossTerms loss_terms(const BarrierNet& net, std::span<const TransitionRecord* const> batch, const TrainConfig& cfg,
                     nn::Gradients* grads = nullptr);
LossTerms loss_terms(const BarrierNet& net, std::span<const TransitionRecord> batch, const TrainConfig& cfg,
                     nn::Gradients* grads = nullptr);

/// The same losses from precomputed barrier values (no network involved).
/// `in_decrease[i]` says whether pair i takes part in L_d.
LossTerms loss_from_values(std::span<const double> b_current, std::span<const double> b_next,
                           std::span<const Label> current_labels, const std::vector<bool>& in_decrease,
                           const TrainConfig& cfg);

/// True for records of held-out trajectories (never refined, never trained on).
std::vector<bool> holdout_mask(const Dataset& dataset, int holdout_modulus);

struct ClassStats {
  std::size_t n = 0;
  std::size_t n_safe = 0;
  std::size_t n_unsafe = 0;
  std::size_t false_unsafe = 0;  // safe with B < 0
  std::size_t false_safe = 0;    // unsafe with B >= 0

  std::size_t misclassified() const { return false_unsafe + false_safe; }
  double accuracy() const { return n ? 1.0 - static_cast<double>(misclassified()) / n : 1.0; }
  double false_unsafe_rate() const { return n_safe ? static_cast<double>(false_unsafe) / n_safe : 0.0; }
};

/// Sign of B(current) against current_label. `select`, when given, picks the
/// records to score.
ClassStats classify(const BarrierNet& net, std::span<const TransitionRecord> records,
                    const std::vector<bool>* select = nullptr, bool select_value = true);

/// B(current) for every record, batched.
std::vector<double> current_values(const BarrierNet& net, std::span<const TransitionRecord> records);

struct EpochLog {
  int epoch = 0;
  LossTerms mean;  // batch-size weighted
  double holdout_accuracy = 0.0;

  std::string to_text() const;
};

struct TrainResult {
  BarrierNet net;
  std::vector<EpochLog> log;
};

/// Seeded shuffled minibatch Adam on L. Starts from `warm_start` when given,
/// otherwise from a fresh network seeded with cfg.seed. Throws
/// DegenerateDataset when the training split lacks a class.
TrainResult train_initial(const Dataset& dataset, const TrainConfig& cfg, const ArchSpec& arch = {},
                          const BarrierNet* warm_start = nullptr,
                          const std::function<void(const EpochLog&)>& on_epoch = {});

// ---- refinement ----

enum class RefineMode { BothSides, UnsafeOnly, SafeOnly };

std::string_view refine_mode_name(RefineMode m);
RefineMode refine_mode_from_name(std::string_view name);

struct RefineConfig {
  double delta = 0.1;
  int s = 4;
  int n_batches = 10;
  RefineMode mode = RefineMode::BothSides;
  int grid_directions = 8;
  std::vector<double> grid_scales{0.25, 0.5, 0.75, 1.0};  // multiples of max_step
  int max_samples_per_batch = 64;
  int finetune_epochs = 2;
  int max_extra_epochs = 12;
  double finetune_lr = 3e-4;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Stay followed by every direction at every scale (33 actions by default).
std::vector<Action> refinement_grid(const RefineConfig& cfg, double max_step);

/// Indices of records with |B(current)| <= delta, filtered by mode sign
/// (UnsafeOnly keeps B <= 0, SafeOnly keeps B >= 0). Only records with
/// eligible[i] set are considered when `eligible` is given.
std::vector<std::size_t> find_boundary_samples(const Dataset& dataset, const BarrierNet& net, double delta,
                                               RefineMode mode, const std::vector<bool>* eligible = nullptr);
std::vector<std::size_t> find_boundary_samples(std::span<const double> values, double delta, RefineMode mode,
                                               const std::vector<bool>* eligible = nullptr);

/// Grid action maximizing B_global over live objects at the predicted robot
/// position. Ties: smallest norm, then lowest index. With no live objects
/// every value is +inf and the first smallest-norm action wins.
Action safest_control(const BarrierNet& net, const HistoryTracker& tracker, std::span<const Action> grid,
                      const WorldConfig& world);
/// Same rule applied to precomputed B_global values.
std::size_t safest_index(std::span<const double> values, std::span<const Action> grid);

/// Re-simulates each sample from its trajectory's snapshots, then follows
/// safest_control for s steps. Every rollout becomes a new trajectory whose
/// records (s per object) are returned in `added`; `dataset` gains the
/// trajectory logs but not the records.
struct RefineBatchResult {
  std::vector<TransitionRecord> added;
  std::size_t samples = 0;
};
RefineBatchResult refine_batch(const BarrierNet& net, Dataset& dataset, std::span<const std::size_t> samples,
                               const RefineConfig& cfg);

struct RefineBatchLog {
  int batch = 0;
  std::size_t boundary = 0;
  std::size_t refined = 0;
  std::size_t added = 0;
  std::size_t misclassified = 0;  // outside the holdout, after fine-tuning
  double holdout_accuracy = 0.0;
  double holdout_false_unsafe_rate = 0.0;
  int epochs = 0;

  std::string to_text() const;
};

struct RefineResult {
  BarrierNet net;
  std::vector<RefineBatchLog> log;
};

/// refine_batch -> append -> warm-started fine-tuning, n_batches times or
/// until the training split is perfectly classified. Each batch keeps the
/// checkpoint (the incoming net included) with the fewest training
/// misclassifications. `dataset` is augmented in place.
RefineResult refine_loop(const BarrierNet& initial, Dataset& dataset, const RefineConfig& rcfg,
                         const TrainConfig& tcfg, const std::function<void(const RefineBatchLog&)>& on_batch = {});

}  // namespace dcbf

#pragma once

// Object-centric barrier B(r_next, O) and its min-composition.
//
// Per object, the network sees the next end-effector position and the last T
// object states, all expressed relative to the object's anchor state T steps
// back. Only planar translation is removed; z and tilt pass through.
//
// Feature layout (version 1): history rows oldest -> newest, columns
// (x - x_anchor, y - y_anchor, z, theta[rad]); robot input (x - x_anchor,
// y - y_anchor). Inside the network each column is multiplied by the fixed
// scale recorded in ArchSpec before the first layer.

#include "dcbf/geometry.hpp"
#include "dcbf/nn.hpp"
#include "dcbf/sim.hpp"

#include <atomic>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace dcbf {

/// The learner-visible part of an ObjectState (no tilt direction).
struct ObjectObservation {
  Vec2 pos = Vec2::Zero();
  double z = 0.0;
  double theta = 0.0;
  bool fallen = false;

  bool operator==(const ObjectObservation&) const = default;
};

inline ObjectObservation observe(const ObjectState& s) { return {s.pos, s.z, s.theta, s.fallen}; }

/// entries[0] is the anchor (time t-T); entries[1..T] are o^{t-T+1} .. o^t.
struct ObjectHistory {
  int object_id = -1;
  std::vector<ObjectObservation> entries;

  const ObjectObservation& anchor() const { return entries.front(); }
  const ObjectObservation& latest() const { return entries.back(); }
  /// Largest planar distance of any entry from the anchor.
  double window_displacement() const;

  bool operator==(const ObjectHistory&) const = default;
};

struct RelativeObservation {
  Vec2 rel_robot_next = Vec2::Zero();
  Eigen::MatrixX4d rel_history;  // T x 4

  bool operator==(const RelativeObservation&) const = default;
};

/// Throws ShortHistory when `history` holds fewer than T+1 entries and
/// ShapeMismatch when it holds more.
RelativeObservation to_object_frame(const Vec2& robot_next, const ObjectHistory& history,
                                    int history_len);

struct ArchSpec {
  int history_len = 8;
  int lstm_hidden = 64;
  std::vector<int> robot_layers{64, 64};
  std::vector<int> head_layers{64, 64};
  nn::Activation activation = nn::Activation::Relu;
  double position_scale = 20.0;
  double z_scale = 10.0;
  double theta_scale = 4.0;
  int feature_layout_version = 1;

  static constexpr int kFeatureDim = 4;

  /// Canonical text stored in checkpoints; equal tags mean compatible weights.
  std::string tag() const;
  static ArchSpec from_tag(std::string_view tag);

  nn::MlpSpec robot_mlp() const;
  nn::MlpSpec head_mlp() const;

  bool operator==(const ArchSpec&) const = default;
};

/// Network inputs for M observations, already scaled.
struct ObsBatch {
  nn::Tensor robot;                  // 2 x M
  std::vector<nn::Tensor> sequence;  // T tensors of 4 x M
  int size() const { return static_cast<int>(robot.cols()); }
};

ObsBatch make_batch(std::span<const RelativeObservation> obs, const ArchSpec& arch);

class BarrierNet {
 public:
  explicit BarrierNet(ArchSpec arch = {}, std::uint64_t seed = 0);

  BarrierNet(const BarrierNet& other);
  BarrierNet& operator=(const BarrierNet& other);

  /// All parameters zero: every output is exactly 0.
  static BarrierNet zeros(ArchSpec arch = {});

  const ArchSpec& arch() const { return arch_; }
  const nn::ParamStore& params() const { return params_; }
  nn::ParamStore& params() { return params_; }

  double value(const RelativeObservation& obs) const;
  Eigen::VectorXd values(std::span<const RelativeObservation> obs) const;

  /// B for every (robot position, object) pair: result(c, k) uses robot c and
  /// history k. Each history is encoded once; the values are bit-identical to
  /// calling value() per pair.
  Eigen::MatrixXd pair_values(std::span<const ObjectHistory> histories,
                              std::span<const Vec2> robot_nexts) const;

  /// Differentiable forward over a batch; returns a 1 x M node.
  nn::Var forward(nn::Tape& tape, const ObsBatch& batch) const;

  /// Per-sample barrier evaluations performed through this object.
  std::uint64_t evaluation_count() const { return evaluations_.load(); }
  void reset_evaluation_count() { evaluations_.store(0); }

  std::string to_checkpoint() const;
  /// Throws VersionMismatch if the stored architecture differs from `expected`.
  static BarrierNet from_checkpoint(std::string_view bytes, const ArchSpec& expected);
  /// Reads the architecture from the checkpoint itself.
  static BarrierNet from_checkpoint(std::string_view bytes);

  void save(const std::string& path) const;
  static BarrierNet load(const std::string& path);

 private:
  nn::Tensor encode(const ObsBatch& batch) const;
  Eigen::RowVectorXd heads(const nn::Tensor& encoded, const nn::Tensor& robot) const;

  ArchSpec arch_;
  nn::ParamStore params_;
  mutable std::atomic<std::uint64_t> evaluations_{0};
};

/// Elementwise B over a batch; same bits as per-row value().
Eigen::VectorXd batched_barrier(const BarrierNet& net, std::span<const RelativeObservation> obs);

/// min over per-object values; +infinity for an empty scene.
double global_barrier(const BarrierNet& net, std::span<const RelativeObservation> obs);

inline constexpr double kEmptySceneBarrier = std::numeric_limits<double>::infinity();

}  // namespace dcbf

#pragma once

// Minimal reverse-mode differentiation over dense matrices.
//
// Activations are laid out feature-major: a batch of M inputs of width d is a
// d x M matrix, one column per sample. All forward products go through
// `matmul_cols`, whose per-element accumulation order does not depend on the
// batch width, so evaluating a sample alone or inside any batch gives the
// same bits.

#include "dcbf/errors.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace dcbf::nn {

using Tensor = Eigen::MatrixXd;
using Gradients = std::vector<Tensor>;

/// out = w * x, column by column with a fixed k-order accumulation.
void matmul_cols(const Tensor& w, const Tensor& x, Tensor& out);

class ParamStore {
 public:
  /// Throws ConfigError on a duplicate name.
  std::size_t add(std::string name, Tensor init);

  std::size_t size() const { return entries_.size(); }
  std::size_t index_of(std::string_view name) const;
  bool contains(std::string_view name) const;

  const std::string& name(std::size_t i) const { return entries_.at(i).name; }
  const Tensor& value(std::size_t i) const { return entries_.at(i).value; }
  const Tensor& value(std::string_view name) const { return value(index_of(name)); }
  const Tensor& first_moment(std::size_t i) const { return entries_.at(i).m; }
  const Tensor& second_moment(std::size_t i) const { return entries_.at(i).v; }
  std::uint64_t adam_steps() const { return adam_steps_; }

  /// Replaces a value; shapes must agree. Invalidates outstanding tapes.
  void set_value(std::size_t i, Tensor v);

  /// Bumped on every mutation; tapes compare it to detect staleness.
  std::uint64_t version() const { return version_; }

  std::size_t scalar_count() const;
  Gradients zeros_like() const;

  bool operator==(const ParamStore& other) const;

 private:
  struct Entry {
    std::string name;
    Tensor value;
    Tensor m;
    Tensor v;
  };

  friend struct AdamAccess;

  std::vector<Entry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
  std::uint64_t version_ = 0;
  std::uint64_t adam_steps_ = 0;
};

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// One bias-corrected Adam update. Throws ShapeMismatch if grads do not line up.
void adam_step(ParamStore& params, const Gradients& grads, const AdamConfig& cfg);

/// Binary checkpoint: magic, format version, architecture tag, Adam step,
/// then a named-tensor table (row-major values plus both Adam moments).
std::string save_params(const ParamStore& params, std::string_view arch_tag);

/// Throws CorruptCheckpoint on malformed bytes and VersionMismatch when the
/// format version or the architecture tag differ from what the caller expects.
ParamStore load_params(std::string_view bytes, std::string_view expected_arch_tag);

/// Human-readable dump of every tensor (debugging only; not loadable).
std::string params_to_text(const ParamStore& params, std::string_view arch_tag);

struct Var {
  int id = -1;
};

class Tape {
 public:
  explicit Tape(const ParamStore& params);

  Var constant(Tensor value);
  /// Leaf bound to a stored parameter; repeated calls return the same node.
  Var param(std::size_t index);
  Var param(std::string_view name) { return param(params_->index_of(name)); }

  const Tensor& value(Var v) const { return nodes_.at(v.id).value; }
  std::size_t node_count() const { return nodes_.size(); }
  const ParamStore& params() const { return *params_; }

  /// Reverse sweep from `output` seeded with `seed` (same shape as the output).
  /// Returns gradients aligned with the ParamStore; untouched entries are zero.
  /// Throws StaleTape when the store was mutated after recording.
  Gradients backward(Var output, const Tensor& seed);
  Gradients backward(Var scalar_output);

  /// Signs of every hinge/ReLU input recorded so far. Two forward passes with
  /// equal signatures are on the same linear piece.
  std::vector<bool> kink_signature() const;

  using BackwardFn = std::function<void(Tape&, const Tensor& grad_out)>;
  Var push(Tensor value, BackwardFn backward);
  void accumulate(Var v, const Tensor& grad);
  void mark_kink(Var input) { kinks_.push_back(input.id); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    BackwardFn backward;
    int param_index = -1;
  };

  const ParamStore* params_;
  std::uint64_t recorded_version_;
  std::vector<Node> nodes_;
  std::unordered_map<std::size_t, int> param_nodes_;
  std::vector<int> kinks_;
};

// Differentiable ops. Shapes follow Eigen; mismatches throw ShapeMismatch.
Var matmul(Tape& t, Var w, Var x);
Var add(Tape& t, Var a, Var b);
Var sub(Tape& t, Var a, Var b);
Var mul(Tape& t, Var a, Var b);
Var scale(Tape& t, Var a, double c);
Var add_bias(Tape& t, Var x, Var bias);  // bias: rows x 1, broadcast over columns
Var sigmoid(Tape& t, Var a);
Var tanh(Tape& t, Var a);
Var relu(Tape& t, Var a);
Var vstack(Tape& t, Var top, Var bottom);
Var row_block(Tape& t, Var a, int start, int count);
Var col_block(Tape& t, Var a, int start, int count);
Var sum(Tape& t, Var a);  // 1 x 1

enum class Activation { Identity, Relu, Tanh, Sigmoid };

std::string_view activation_name(Activation a);
Activation activation_from_name(std::string_view name);

struct MlpSpec {
  int input = 0;
  std::vector<int> layers;  // output width of each layer
  Activation activation = Activation::Relu;
  bool activate_output = true;
  bool output_bias = true;
};

/// Registers `<prefix>.<k>.w` (and `.b`) with uniform +-1/sqrt(fan_in) init.
void add_mlp_params(ParamStore& store, std::string_view prefix, const MlpSpec& spec,
                    std::mt19937_64& rng);

/// LSTM weights `<prefix>.w_ih` (4H x d_in), `.w_hh` (4H x H), `.b` (4H x 1);
/// gate row order is input, forget, candidate, output; forget bias starts at +1.
void add_lstm_params(ParamStore& store, std::string_view prefix, int input, int hidden,
                     std::mt19937_64& rng);

Var mlp_forward(Tape& t, std::string_view prefix, Var input, const MlpSpec& spec);
Tensor mlp_infer(const ParamStore& params, std::string_view prefix, const Tensor& input,
                 const MlpSpec& spec);

/// `sequence[k]` is the d_in x M input at step k; returns h_T (H x M).
Var lstm_forward(Tape& t, std::string_view prefix, std::span<const Var> sequence);
Tensor lstm_infer(const ParamStore& params, std::string_view prefix,
                  std::span<const Tensor> sequence);

}  // namespace dcbf::nn

#include "dcbf/nn.hpp"

#include <cmath>

namespace dcbf::nn {
namespace {

std::string key(std::string_view prefix, std::string_view leaf) {
  return std::string(prefix) + "." + std::string(leaf);
}

std::string layer_key(std::string_view prefix, std::size_t layer, std::string_view leaf) {
  return std::string(prefix) + "." + std::to_string(layer) + "." + std::string(leaf);
}

Tensor uniform_tensor(int rows, int cols, double bound, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  Tensor t(rows, cols);
  for (int j = 0; j < cols; ++j) {
    for (int i = 0; i < rows; ++i) t(i, j) = dist(rng);
  }
  return t;
}

Var activate(Tape& t, Var x, Activation a) {
  switch (a) {
    case Activation::Identity: return x;
    case Activation::Relu: return relu(t, x);
    case Activation::Tanh: return tanh(t, x);
    case Activation::Sigmoid: return sigmoid(t, x);
  }
  return x;
}

void activate_inplace(Tensor& x, Activation a) {
  switch (a) {
    case Activation::Identity: break;
    case Activation::Relu: x = x.cwiseMax(0.0); break;
    case Activation::Tanh: x = x.array().tanh().matrix(); break;
    case Activation::Sigmoid: x = x.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); }); break;
  }
}

Tensor sigmoid_of(const Tensor& x) {
  return x.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
}

void check_input(const Tensor& input, int expected, const char* what) {
  if (input.rows() != expected) {
    throw ShapeMismatch(std::string(what) + ": input has " + std::to_string(input.rows()) +
                        " rows, expected " + std::to_string(expected));
  }
}

}  // namespace

std::string_view activation_name(Activation a) {
  switch (a) {
    case Activation::Identity: return "identity";
    case Activation::Relu: return "relu";
    case Activation::Tanh: return "tanh";
    case Activation::Sigmoid: return "sigmoid";
  }
  return "identity";
}

Activation activation_from_name(std::string_view name) {
  if (name == "identity") return Activation::Identity;
  if (name == "relu") return Activation::Relu;
  if (name == "tanh") return Activation::Tanh;
  if (name == "sigmoid") return Activation::Sigmoid;
  throw ConfigError("unknown activation: " + std::string(name));
}

void add_mlp_params(ParamStore& store, std::string_view prefix, const MlpSpec& spec,
                    std::mt19937_64& rng) {
  int fan_in = spec.input;
  for (std::size_t k = 0; k < spec.layers.size(); ++k) {
    const int out = spec.layers[k];
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    store.add(layer_key(prefix, k, "w"), uniform_tensor(out, fan_in, bound, rng));
    const bool last = k + 1 == spec.layers.size();
    if (!last || spec.output_bias) store.add(layer_key(prefix, k, "b"), uniform_tensor(out, 1, bound, rng));
    fan_in = out;
  }
}

void add_lstm_params(ParamStore& store, std::string_view prefix, int input, int hidden,
                     std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(input + hidden));
  store.add(key(prefix, "w_ih"), uniform_tensor(4 * hidden, input, bound, rng));
  store.add(key(prefix, "w_hh"), uniform_tensor(4 * hidden, hidden, bound, rng));
  Tensor b = uniform_tensor(4 * hidden, 1, bound, rng);
  b.middleRows(hidden, hidden).setConstant(1.0);
  store.add(key(prefix, "b"), std::move(b));
}

Var mlp_forward(Tape& t, std::string_view prefix, Var input, const MlpSpec& spec) {
  check_input(t.value(input), spec.input, "mlp_forward");
  Var x = input;
  for (std::size_t k = 0; k < spec.layers.size(); ++k) {
    const bool last = k + 1 == spec.layers.size();
    x = matmul(t, t.param(layer_key(prefix, k, "w")), x);
    if (!last || spec.output_bias) x = add_bias(t, x, t.param(layer_key(prefix, k, "b")));
    if (!last || spec.activate_output) x = activate(t, x, spec.activation);
  }
  return x;
}

Tensor mlp_infer(const ParamStore& params, std::string_view prefix, const Tensor& input,
                 const MlpSpec& spec) {
  check_input(input, spec.input, "mlp_infer");
  Tensor x = input;
  Tensor y;
  for (std::size_t k = 0; k < spec.layers.size(); ++k) {
    const bool last = k + 1 == spec.layers.size();
    matmul_cols(params.value(layer_key(prefix, k, "w")), x, y);
    if (!last || spec.output_bias) y = y.colwise() + params.value(layer_key(prefix, k, "b")).col(0);
    if (!last || spec.activate_output) activate_inplace(y, spec.activation);
    std::swap(x, y);
  }
  return x;
}

Var lstm_forward(Tape& t, std::string_view prefix, std::span<const Var> sequence) {
  if (sequence.empty()) throw ShapeMismatch("lstm_forward: empty sequence");
  const Var w_ih = t.param(key(prefix, "w_ih"));
  const Var w_hh = t.param(key(prefix, "w_hh"));
  const Var b = t.param(key(prefix, "b"));
  const int hidden = static_cast<int>(t.value(w_hh).cols());
  const auto batch = t.value(sequence[0]).cols();
  Var h = t.constant(Tensor::Zero(hidden, batch));
  Var c = t.constant(Tensor::Zero(hidden, batch));
  for (const Var x : sequence) {
    check_input(t.value(x), static_cast<int>(t.value(w_ih).cols()), "lstm_forward");
    if (t.value(x).cols() != batch) throw ShapeMismatch("lstm_forward: ragged batch");
    const Var z = add_bias(t, add(t, matmul(t, w_ih, x), matmul(t, w_hh, h)), b);
    const Var in = sigmoid(t, row_block(t, z, 0, hidden));
    const Var forget = sigmoid(t, row_block(t, z, hidden, hidden));
    const Var cand = tanh(t, row_block(t, z, 2 * hidden, hidden));
    const Var out = sigmoid(t, row_block(t, z, 3 * hidden, hidden));
    c = add(t, mul(t, forget, c), mul(t, in, cand));
    h = mul(t, out, tanh(t, c));
  }
  return h;
}

Tensor lstm_infer(const ParamStore& params, std::string_view prefix,
                  std::span<const Tensor> sequence) {
  if (sequence.empty()) throw ShapeMismatch("lstm_infer: empty sequence");
  const Tensor& w_ih = params.value(key(prefix, "w_ih"));
  const Tensor& w_hh = params.value(key(prefix, "w_hh"));
  const Tensor& b = params.value(key(prefix, "b"));
  const auto hidden = w_hh.cols();
  const auto batch = sequence[0].cols();
  Tensor h = Tensor::Zero(hidden, batch);
  Tensor c = Tensor::Zero(hidden, batch);
  Tensor zx, zh;
  for (const Tensor& x : sequence) {
    check_input(x, static_cast<int>(w_ih.cols()), "lstm_infer");
    if (x.cols() != batch) throw ShapeMismatch("lstm_infer: ragged batch");
    matmul_cols(w_ih, x, zx);
    matmul_cols(w_hh, h, zh);
    const Tensor z = (zx + zh).colwise() + b.col(0);
    const Tensor in = sigmoid_of(z.middleRows(0, hidden));
    const Tensor forget = sigmoid_of(z.middleRows(hidden, hidden));
    const Tensor cand = z.middleRows(2 * hidden, hidden).array().tanh().matrix();
    const Tensor out = sigmoid_of(z.middleRows(3 * hidden, hidden));
    c = forget.cwiseProduct(c) + in.cwiseProduct(cand);
    h = out.cwiseProduct(Tensor(c.array().tanh().matrix()));
  }
  return h;
}

}  // namespace dcbf::nn

#include "dcbf/nn.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <functional>

namespace dcbf::nn {
namespace {

Tensor random_tensor(int r, int c, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Tensor t(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) t(i, j) = u(rng);
  return t;
}

// Central-difference check of d(sum(f))/d(param) for every scalar parameter.
void check_gradients(ParamStore& params, const std::function<Var(Tape&)>& f, double tol = 1e-6) {
  Tape tape(params);
  const Var out = sum(tape, f(tape));
  const Gradients g = tape.backward(out);
  const double h = 1e-6;
  for (std::size_t p = 0; p < params.size(); ++p) {
    for (Eigen::Index k = 0; k < params.value(p).size(); ++k) {
      Tensor v = params.value(p);
      const double orig = v(k);
      v(k) = orig + h;
      params.set_value(p, v);
      Tape tp(params);
      const double fp = tp.value(sum(tp, f(tp)))(0, 0);
      v(k) = orig - h;
      params.set_value(p, v);
      Tape tm(params);
      const double fm = tm.value(sum(tm, f(tm)))(0, 0);
      v(k) = orig;
      params.set_value(p, v);
      const double fd = (fp - fm) / (2 * h);
      EXPECT_NEAR(g[p](k), fd, tol * std::max(1.0, std::abs(fd))) << params.name(p) << "[" << k << "]";
    }
  }
}

TEST(MatmulCols, BatchInvariantBits) {
  std::mt19937_64 rng(1);
  const Tensor w = random_tensor(7, 13, rng);
  const Tensor x = random_tensor(13, 9, rng);
  Tensor full;
  matmul_cols(w, x, full);
  EXPECT_LT((full - w * x).cwiseAbs().maxCoeff(), 1e-12);
  for (int c = 0; c < x.cols(); ++c) {
    Tensor one;
    matmul_cols(w, x.col(c), one);
    for (int r = 0; r < w.rows(); ++r) EXPECT_EQ(one(r, 0), full(r, c));
  }
}

TEST(Tape, ElementwiseGradients) {
  std::mt19937_64 rng(2);
  ParamStore params;
  params.add("a", random_tensor(3, 4, rng));
  params.add("b", random_tensor(3, 4, rng));
  params.add("w", random_tensor(2, 3, rng));
  params.add("bias", random_tensor(2, 1, rng));
  check_gradients(params, [](Tape& t) {
    const Var a = t.param("a"), b = t.param("b");
    const Var m = mul(t, tanh(t, a), sigmoid(t, b));
    const Var s = sub(t, add(t, m, scale(t, a, 0.3)), b);
    const Var y = add_bias(t, matmul(t, t.param("w"), s), t.param("bias"));
    return vstack(t, col_block(t, relu(t, y), 1, 2), row_block(t, col_block(t, s, 1, 2), 0, 2));
  });
}

TEST(Tape, MlpAndLstmGradients) {
  std::mt19937_64 rng(3);
  ParamStore params;
  const MlpSpec mlp{4, {5, 1}, Activation::Tanh, false, true};
  add_mlp_params(params, "mlp", mlp, rng);
  add_lstm_params(params, "lstm", 3, 4, rng);
  std::vector<Tensor> seq;
  for (int k = 0; k < 3; ++k) seq.push_back(random_tensor(3, 2, rng));
  check_gradients(params, [&](Tape& t) {
    std::vector<Var> xs;
    for (const auto& s : seq) xs.push_back(t.constant(s));
    const Var h = lstm_forward(t, "lstm", xs);
    return mlp_forward(t, "mlp", h, mlp);
  });
}

TEST(Tape, InferMatchesForward) {
  std::mt19937_64 rng(4);
  ParamStore params;
  const MlpSpec mlp{4, {6, 3}, Activation::Relu, true, true};
  add_mlp_params(params, "m", mlp, rng);
  add_lstm_params(params, "l", 2, 4, rng);
  std::vector<Tensor> seq{random_tensor(2, 5, rng), random_tensor(2, 5, rng)};
  Tape t(params);
  std::vector<Var> xs{t.constant(seq[0]), t.constant(seq[1])};
  const Var h = lstm_forward(t, "l", xs);
  const Var y = mlp_forward(t, "m", h, mlp);
  EXPECT_EQ(t.value(h), lstm_infer(params, "l", seq));
  EXPECT_EQ(t.value(y), mlp_infer(params, "m", t.value(h), mlp));
}

TEST(Tape, StaleAfterParameterUpdate) {
  ParamStore params;
  params.add("w", Tensor::Ones(2, 2));
  Tape t(params);
  const Var out = sum(t, t.param("w"));
  params.set_value(0, Tensor::Zero(2, 2));
  EXPECT_THROW(t.backward(out), StaleTape);
}

TEST(Tape, KinkSignatureTracksReluPieces) {
  ParamStore params;
  params.add("x", (Tensor(1, 3) << -1.0, 0.5, 2.0).finished());
  Tape t(params);
  relu(t, t.param("x"));
  const auto sig = t.kink_signature();
  ASSERT_EQ(sig.size(), 3u);
  EXPECT_FALSE(sig[0]);
  EXPECT_TRUE(sig[1]);
  EXPECT_TRUE(sig[2]);
}

TEST(Params, DuplicateAndUnknownNames) {
  ParamStore params;
  params.add("w", Tensor::Ones(1, 1));
  EXPECT_THROW(params.add("w", Tensor::Ones(1, 1)), ConfigError);
  EXPECT_THROW(params.index_of("nope"), ShapeMismatch);
  EXPECT_THROW(params.set_value(0, Tensor::Ones(2, 1)), ShapeMismatch);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  ParamStore params;
  params.add("w", (Tensor(1, 2) << 1.0, -2.0).finished());
  Gradients g{(Tensor(1, 2) << 0.5, -3.0).finished()};
  adam_step(params, g, AdamConfig{0.1});
  // Bias-corrected first step is lr * sign(g) up to eps.
  EXPECT_NEAR(params.value(0)(0, 0), 0.9, 1e-6);
  EXPECT_NEAR(params.value(0)(0, 1), -1.9, 1e-6);
  EXPECT_EQ(params.adam_steps(), 1u);
  EXPECT_THROW(adam_step(params, Gradients{}, AdamConfig{}), ShapeMismatch);
}

TEST(Checkpoint, RoundTripAndErrors) {
  std::mt19937_64 rng(5);
  ParamStore params;
  add_mlp_params(params, "m", MlpSpec{3, {4, 1}, Activation::Relu, false, true}, rng);
  adam_step(params, params.zeros_like(), AdamConfig{});
  const std::string bytes = save_params(params, "arch-a");
  EXPECT_EQ(load_params(bytes, "arch-a"), params);
  EXPECT_THROW(load_params(bytes, "arch-b"), VersionMismatch);
  EXPECT_THROW(load_params(bytes.substr(0, bytes.size() - 3), "arch-a"), CorruptCheckpoint);
  std::string bad = bytes;
  bad[0] = 'x';
  EXPECT_THROW(load_params(bad, "arch-a"), CorruptCheckpoint);
  EXPECT_THROW(load_params(bytes + "z", "arch-a"), CorruptCheckpoint);
}

TEST(Activation, NamesRoundTrip) {
  for (auto a : {Activation::Identity, Activation::Relu, Activation::Tanh, Activation::Sigmoid}) {
    EXPECT_EQ(activation_from_name(activation_name(a)), a);
  }
  EXPECT_THROW(activation_from_name("swish"), ConfigError);
}

}  // namespace
}  // namespace dcbf::nn

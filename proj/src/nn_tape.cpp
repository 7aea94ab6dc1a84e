#include "dcbf/nn.hpp"

#include <algorithm>
#include <cmath>

namespace dcbf::nn {
namespace {

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeMismatch(std::string(op) + ": " + std::to_string(a.rows()) + "x" +
                        std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                        std::to_string(b.cols()));
  }
}

}  // namespace

void matmul_cols(const Tensor& w, const Tensor& x, Tensor& out) {
  if (w.cols() != x.rows()) {
    throw ShapeMismatch("matmul: inner dimensions " + std::to_string(w.cols()) + " vs " +
                        std::to_string(x.rows()));
  }
  const Eigen::Index rows = w.rows();
  const Eigen::Index inner = w.cols();
  const Eigen::Index cols = x.cols();
  out.setZero(rows, cols);
  constexpr Eigen::Index kBlock = 4;
  for (Eigen::Index j0 = 0; j0 < cols; j0 += kBlock) {
    const Eigen::Index jn = std::min(kBlock, cols - j0);
    for (Eigen::Index k = 0; k < inner; ++k) {
      const double* wk = w.data() + k * rows;
      for (Eigen::Index jj = 0; jj < jn; ++jj) {
        const double s = x(k, j0 + jj);
        if (s == 0.0) continue;
        double* o = out.data() + (j0 + jj) * rows;
        for (Eigen::Index i = 0; i < rows; ++i) o[i] += wk[i] * s;
      }
    }
  }
}

Tape::Tape(const ParamStore& params) : params_(&params), recorded_version_(params.version()) {}

Var Tape::push(Tensor value, BackwardFn backward) {
  nodes_.push_back(Node{std::move(value), Tensor(), std::move(backward), -1});
  return Var{static_cast<int>(nodes_.size()) - 1};
}

Var Tape::constant(Tensor value) { return push(std::move(value), nullptr); }

Var Tape::param(std::size_t index) {
  if (auto it = param_nodes_.find(index); it != param_nodes_.end()) return Var{it->second};
  Var v = push(params_->value(index), nullptr);
  nodes_[v.id].param_index = static_cast<int>(index);
  param_nodes_.emplace(index, v.id);
  return v;
}

void Tape::accumulate(Var v, const Tensor& grad) {
  Node& n = nodes_.at(v.id);
  if (n.grad.size() == 0) {
    n.grad = grad;
  } else {
    n.grad += grad;
  }
}

Gradients Tape::backward(Var output, const Tensor& seed) {
  if (params_->version() != recorded_version_) {
    throw StaleTape("parameters changed after the forward pass was recorded");
  }
  require_same_shape(value(output), seed, "backward seed");
  for (auto& n : nodes_) n.grad.resize(0, 0);
  nodes_[output.id].grad = seed;
  for (int i = output.id; i >= 0; --i) {
    Node& n = nodes_[i];
    if (n.grad.size() == 0 || !n.backward) continue;
    // Inputs always precede their consumer, so this only touches lower ids.
    n.backward(*this, n.grad);
  }
  Gradients grads = params_->zeros_like();
  for (const auto& [index, id] : param_nodes_) {
    if (nodes_[id].grad.size() != 0) grads[index] = nodes_[id].grad;
  }
  return grads;
}

Gradients Tape::backward(Var scalar_output) {
  const Tensor& v = value(scalar_output);
  return backward(scalar_output, Tensor::Ones(v.rows(), v.cols()));
}

std::vector<bool> Tape::kink_signature() const {
  std::vector<bool> sig;
  for (int id : kinks_) {
    const Tensor& v = nodes_[id].value;
    for (Eigen::Index k = 0; k < v.size(); ++k) sig.push_back(v.data()[k] > 0.0);
  }
  return sig;
}

Var matmul(Tape& t, Var w, Var x) {
  Tensor out;
  matmul_cols(t.value(w), t.value(x), out);
  return t.push(std::move(out), [w, x](Tape& tp, const Tensor& g) {
    tp.accumulate(w, g * tp.value(x).transpose());
    tp.accumulate(x, tp.value(w).transpose() * g);
  });
}

Var add(Tape& t, Var a, Var b) {
  require_same_shape(t.value(a), t.value(b), "add");
  return t.push(t.value(a) + t.value(b), [a, b](Tape& tp, const Tensor& g) {
    tp.accumulate(a, g);
    tp.accumulate(b, g);
  });
}

Var sub(Tape& t, Var a, Var b) {
  require_same_shape(t.value(a), t.value(b), "sub");
  return t.push(t.value(a) - t.value(b), [a, b](Tape& tp, const Tensor& g) {
    tp.accumulate(a, g);
    tp.accumulate(b, -g);
  });
}

Var mul(Tape& t, Var a, Var b) {
  require_same_shape(t.value(a), t.value(b), "mul");
  return t.push(t.value(a).cwiseProduct(t.value(b)), [a, b](Tape& tp, const Tensor& g) {
    tp.accumulate(a, g.cwiseProduct(tp.value(b)));
    tp.accumulate(b, g.cwiseProduct(tp.value(a)));
  });
}

Var scale(Tape& t, Var a, double c) {
  return t.push(t.value(a) * c, [a, c](Tape& tp, const Tensor& g) { tp.accumulate(a, g * c); });
}

Var add_bias(Tape& t, Var x, Var bias) {
  const Tensor& xv = t.value(x);
  const Tensor& bv = t.value(bias);
  if (bv.cols() != 1 || bv.rows() != xv.rows()) {
    throw ShapeMismatch("add_bias: bias must be " + std::to_string(xv.rows()) + "x1");
  }
  Tensor out = xv.colwise() + bv.col(0);
  return t.push(std::move(out), [x, bias](Tape& tp, const Tensor& g) {
    tp.accumulate(x, g);
    tp.accumulate(bias, g.rowwise().sum());
  });
}

Var sigmoid(Tape& t, Var a) {
  const Var self{static_cast<int>(t.node_count())};
  Tensor s = t.value(a).unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
  return t.push(std::move(s), [a, self](Tape& tp, const Tensor& g) {
    const auto y = tp.value(self).array();
    tp.accumulate(a, (g.array() * y * (1.0 - y)).matrix());
  });
}

Var tanh(Tape& t, Var a) {
  const Var self{static_cast<int>(t.node_count())};
  Tensor v = t.value(a).array().tanh().matrix();
  return t.push(std::move(v), [a, self](Tape& tp, const Tensor& g) {
    const auto y = tp.value(self).array();
    tp.accumulate(a, (g.array() * (1.0 - y.square())).matrix());
  });
}

Var relu(Tape& t, Var a) {
  t.mark_kink(a);
  return t.push(t.value(a).cwiseMax(0.0), [a](Tape& tp, const Tensor& g) {
    const Tensor& x = tp.value(a);
    tp.accumulate(a, (x.array() > 0.0).select(g.array(), 0.0).matrix());
  });
}

Var vstack(Tape& t, Var top, Var bottom) {
  const Tensor& a = t.value(top);
  const Tensor& b = t.value(bottom);
  if (a.cols() != b.cols()) throw ShapeMismatch("vstack: column counts differ");
  Tensor out(a.rows() + b.rows(), a.cols());
  out << a, b;
  const auto rows_top = a.rows();
  const auto rows_bottom = b.rows();
  return t.push(std::move(out), [top, bottom, rows_top, rows_bottom](Tape& tp, const Tensor& g) {
    tp.accumulate(top, g.topRows(rows_top));
    tp.accumulate(bottom, g.bottomRows(rows_bottom));
  });
}

Var row_block(Tape& t, Var a, int start, int count) {
  const Tensor& v = t.value(a);
  if (start < 0 || count < 0 || start + count > v.rows()) throw ShapeMismatch("row_block out of range");
  const auto rows = v.rows();
  const auto cols = v.cols();
  return t.push(v.middleRows(start, count), [a, start, count, rows, cols](Tape& tp, const Tensor& g) {
    Tensor full = Tensor::Zero(rows, cols);
    full.middleRows(start, count) = g;
    tp.accumulate(a, full);
  });
}

Var col_block(Tape& t, Var a, int start, int count) {
  const Tensor& v = t.value(a);
  if (start < 0 || count < 0 || start + count > v.cols()) throw ShapeMismatch("col_block out of range");
  const auto rows = v.rows();
  const auto cols = v.cols();
  return t.push(v.middleCols(start, count), [a, start, count, rows, cols](Tape& tp, const Tensor& g) {
    Tensor full = Tensor::Zero(rows, cols);
    full.middleCols(start, count) = g;
    tp.accumulate(a, full);
  });
}

Var sum(Tape& t, Var a) {
  const Tensor& v = t.value(a);
  Tensor out(1, 1);
  out(0, 0) = v.sum();
  const auto rows = v.rows();
  const auto cols = v.cols();
  return t.push(std::move(out), [a, rows, cols](Tape& tp, const Tensor& g) {
    tp.accumulate(a, Tensor::Constant(rows, cols, g(0, 0)));
  });
}

}  // namespace dcbf::nn

#include "seqnlg/kernels.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <string>

#include "seqnlg/errors.hpp"

namespace seqnlg::nn {

namespace {

void expect_vector(const Tensor& t, std::size_t n, const char* what) {
  if (t.rank() != 1 || t.size() != n) {
    throw ShapeError(std::string(what) + ": expected vector of length " + std::to_string(n) +
                     ", got " + t.shape_string());
  }
}

void expect_matrix(const Tensor& t, std::size_t rows, std::size_t cols, const char* what) {
  if (t.rank() != 2 || t.rows() != rows || t.cols() != cols) {
    throw ShapeError(std::string(what) + ": expected " + std::to_string(rows) + "x" +
                     std::to_string(cols) + ", got " + t.shape_string());
  }
}

}  // namespace

LstmCellParams LstmCellParams::zeros(std::size_t input_size, std::size_t hidden_size) {
  LstmCellParams p;
  p.input_size = input_size;
  p.hidden_size = hidden_size;
  p.input_weights = Tensor({input_size, 4 * hidden_size});
  p.hidden_weights = Tensor({hidden_size, 4 * hidden_size});
  p.bias = Tensor({4 * hidden_size});
  return p;
}

LstmCellParams LstmCellParams::uniform(std::size_t input_size, std::size_t hidden_size, Rng& rng,
                                       double scale) {
  LstmCellParams p = zeros(input_size, hidden_size);
  for (Tensor* t : {&p.input_weights, &p.hidden_weights, &p.bias}) {
    for (double& v : t->values()) v = rng.uniform(-scale, scale);
  }
  return p;
}

void LstmCellParams::validate() const {
  if (input_size == 0 || hidden_size == 0) throw ShapeError("LSTM sizes must be positive");
  expect_matrix(input_weights, input_size, 4 * hidden_size, "LSTM input weights");
  expect_matrix(hidden_weights, hidden_size, 4 * hidden_size, "LSTM hidden weights");
  expect_vector(bias, 4 * hidden_size, "LSTM bias");
}

namespace {

Tensor gate_block(const Tensor& fused, std::size_t hidden, Gate g) {
  const std::size_t k = static_cast<std::size_t>(g);
  const std::size_t rows = fused.rank() == 1 ? 1 : fused.rows();
  std::vector<double> out;
  out.reserve(rows * hidden);
  for (std::size_t r = 0; r < rows; ++r) {
    auto src = fused.rank() == 1 ? fused.values() : fused.row(r);
    out.insert(out.end(), src.begin() + k * hidden, src.begin() + (k + 1) * hidden);
  }
  if (fused.rank() == 1) return Tensor::vector(std::move(out));
  return Tensor::matrix(rows, hidden, std::move(out));
}

void set_block(Tensor& fused, std::size_t hidden, Gate g, const Tensor& block) {
  const std::size_t k = static_cast<std::size_t>(g);
  const std::size_t rows = fused.rank() == 1 ? 1 : fused.rows();
  if (block.size() != rows * hidden) {
    throw ShapeError("gate block of shape " + block.shape_string() + " does not fit " +
                     fused.shape_string());
  }
  for (std::size_t r = 0; r < rows; ++r) {
    auto dst = fused.rank() == 1 ? fused.values() : fused.row(r);
    std::copy_n(block.data() + r * hidden, hidden, dst.begin() + k * hidden);
  }
}

}  // namespace

Tensor LstmCellParams::gate_input_weights(Gate g) const {
  return gate_block(input_weights, hidden_size, g);
}
Tensor LstmCellParams::gate_hidden_weights(Gate g) const {
  return gate_block(hidden_weights, hidden_size, g);
}
Tensor LstmCellParams::gate_bias(Gate g) const { return gate_block(bias, hidden_size, g); }

void LstmCellParams::set_gate(Gate g, const Tensor& input_to_hidden,
                              const Tensor& hidden_to_hidden, const Tensor& gate_bias) {
  set_block(input_weights, hidden_size, g, input_to_hidden);
  set_block(hidden_weights, hidden_size, g, hidden_to_hidden);
  set_block(bias, hidden_size, g, gate_bias);
}

void vecmat(std::span<const double> x, const Tensor& w, std::span<double> out) {
  const std::size_t n = w.rows();
  const std::size_t m = w.cols();
  if (x.size() != n || out.size() != m) {
    throw ShapeError("vecmat: vector of length " + std::to_string(x.size()) +
                     " times matrix " + w.shape_string());
  }
  std::fill(out.begin(), out.end(), 0.0);
  const double* wp = w.data();
  double* op = out.data();
  for (std::size_t i = 0; i < n; ++i) {
    const double xi = x[i];
    if (xi == 0.0) continue;
    const double* wr = wp + i * m;
    for (std::size_t j = 0; j < m; ++j) op[j] += xi * wr[j];
  }
}

Tensor vecmat(const Tensor& x, const Tensor& w) {
  Tensor out({w.cols()});
  vecmat(x.values(), w, out.values());
  return out;
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Tensor sigmoid(const Tensor& x) {
  Tensor out = x;
  for (double& v : out.values()) v = sigmoid(v);
  return out;
}

void lstm_gates(std::span<const double> z, std::span<const double> c_prev, std::span<double> h,
                std::span<double> c) {
  const std::size_t hs = c_prev.size();
  for (std::size_t k = 0; k < hs; ++k) {
    const double ig = sigmoid(z[k]);
    const double fg = sigmoid(z[hs + k]);
    const double og = sigmoid(z[2 * hs + k]);
    const double gg = std::tanh(z[3 * hs + k]);
    c[k] = fg * c_prev[k] + ig * gg;
    h[k] = og * std::tanh(c[k]);
  }
}

LstmState lstm_step(const LstmCellParams& cell, const Tensor& x, const Tensor& h_prev,
                    const Tensor& c_prev) {
  cell.validate();
  expect_vector(x, cell.input_size, "lstm_step input");
  expect_vector(h_prev, cell.hidden_size, "lstm_step previous hidden state");
  expect_vector(c_prev, cell.hidden_size, "lstm_step previous memory cell");
  const std::size_t g = 4 * cell.hidden_size;
  Tensor z({g});
  Tensor zh({g});
  vecmat(x.values(), cell.input_weights, z.values());
  vecmat(h_prev.values(), cell.hidden_weights, zh.values());
  for (std::size_t k = 0; k < g; ++k) z[k] = (z[k] + zh[k]) + cell.bias[k];
  LstmState out{Tensor({cell.hidden_size}), Tensor({cell.hidden_size})};
  lstm_gates(z.values(), c_prev.values(), out.h.values(), out.c.values());
  return out;
}

void log_softmax(std::span<const double> logits, std::span<double> out) {
  if (logits.empty()) throw ShapeError("softmax of an empty vector");
  const double mx = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double v : logits) sum += std::exp(v - mx);
  const double lse = mx + std::log(sum);
  for (std::size_t i = 0; i < logits.size(); ++i) out[i] = logits[i] - lse;
}

Tensor log_softmax(const Tensor& logits) {
  Tensor out = Tensor::zeros_like(logits);
  log_softmax(logits.values(), out.values());
  return out;
}

Tensor softmax(const Tensor& logits) {
  if (logits.empty()) throw ShapeError("softmax of an empty vector");
  Tensor out = logits;
  const double mx = *std::max_element(out.values().begin(), out.values().end());
  double sum = 0.0;
  for (double& v : out.values()) {
    v = std::exp(v - mx);
    sum += v;
  }
  for (double& v : out.values()) v /= sum;
  return out;
}

double cross_entropy(const Tensor& distribution, std::size_t target) {
  if (target >= distribution.size()) {
    throw ShapeError("cross_entropy target " + std::to_string(target) +
                     " outside distribution of size " + std::to_string(distribution.size()));
  }
  double p = distribution[target];
  if (p < kMinProbability) {
    spdlog::warn("cross_entropy: p(target={}) = {} clamped to {}", target, p, kMinProbability);
    p = kMinProbability;
  }
  return -std::log(p);
}

double sequence_cross_entropy(std::span<const Tensor> distributions,
                              std::span<const std::size_t> targets) {
  if (distributions.size() != targets.size()) {
    throw ShapeError("sequence_cross_entropy: " + std::to_string(distributions.size()) +
                     " distributions for " + std::to_string(targets.size()) + " targets");
  }
  double total = 0.0;
  for (std::size_t t = 0; t < targets.size(); ++t) total += cross_entropy(distributions[t], targets[t]);
  return total;
}

}  // namespace seqnlg::nn

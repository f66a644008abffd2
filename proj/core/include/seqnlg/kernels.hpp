#pragma once

#include <cstddef>
#include <span>

#include "seqnlg/random.hpp"
#include "seqnlg/tensor.hpp"

namespace seqnlg::nn {

/// Probabilities below this are clamped inside cross-entropy.
inline constexpr double kMinProbability = 1e-12;

/// Gate blocks inside the fused LSTM weight matrices, in column order.
enum class Gate : std::size_t { input = 0, forget = 1, output = 2, candidate = 3 };

/// Standard (non-peephole) LSTM cell.
///
/// The four gates are stored fused: column block k of input_weights,
/// hidden_weights and bias belongs to Gate(k), each block hidden_size wide.
struct LstmCellParams {
  std::size_t input_size = 0;
  std::size_t hidden_size = 0;
  Tensor input_weights;   // [input_size x 4*hidden_size]
  Tensor hidden_weights;  // [hidden_size x 4*hidden_size]
  Tensor bias;            // [4*hidden_size]

  static LstmCellParams zeros(std::size_t input_size, std::size_t hidden_size);
  static LstmCellParams uniform(std::size_t input_size, std::size_t hidden_size, Rng& rng,
                                double scale);

  /// Throws ShapeError unless all matrices conform to the declared sizes.
  void validate() const;

  /// Copies one gate's (input-to-hidden, hidden-to-hidden, bias) block out.
  Tensor gate_input_weights(Gate g) const;
  Tensor gate_hidden_weights(Gate g) const;
  Tensor gate_bias(Gate g) const;
  void set_gate(Gate g, const Tensor& input_to_hidden, const Tensor& hidden_to_hidden,
                const Tensor& gate_bias);
};

struct LstmState {
  Tensor h;
  Tensor c;
};

/// One LSTM step; deterministic and shape-checked.
LstmState lstm_step(const LstmCellParams& cell, const Tensor& x, const Tensor& h_prev,
                    const Tensor& c_prev);

/// Gate nonlinearities and memory update from pre-activations z = [i|f|o|g].
void lstm_gates(std::span<const double> z, std::span<const double> c_prev, std::span<double> h,
                std::span<double> c);

/// out = x * W for x of length W.rows(); out has W.cols() entries.
void vecmat(std::span<const double> x, const Tensor& w, std::span<double> out);
Tensor vecmat(const Tensor& x, const Tensor& w);

Tensor softmax(const Tensor& logits);
Tensor log_softmax(const Tensor& logits);
void log_softmax(std::span<const double> logits, std::span<double> out);

double sigmoid(double x);
Tensor sigmoid(const Tensor& x);

/// -log p(target), with p clamped at kMinProbability (clamping is logged).
double cross_entropy(const Tensor& distribution, std::size_t target);

/// Unweighted sum of per-step cross-entropies.
double sequence_cross_entropy(std::span<const Tensor> distributions,
                              std::span<const std::size_t> targets);

}  // namespace seqnlg::nn

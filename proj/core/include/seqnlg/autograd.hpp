#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <span>
#include <vector>

#include "seqnlg/tensor.hpp"

namespace seqnlg::nn {

class Tape;

/// Handle to a value recorded on a Tape.
struct Var {
  std::uint32_t index = 0;
  std::uint64_t tape_id = 0;
};

/// Reverse-mode gradient tape.
///
/// Every op appends a node holding its forward value and a closure that
/// propagates the node's gradient to its inputs. Parameters are recorded as
/// leaves whose gradients accumulate straight into caller-owned sinks, so a
/// batch is processed by replaying one tape per instance into the same sinks.
class Tape {
 public:
  using Backward = std::function<void(Tape&, std::uint32_t)>;

  Tape();
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Leaf that reads `value` in place and accumulates into `grad_sink`.
  Var parameter(const Tensor& value, Tensor& grad_sink);
  /// Leaf that owns its value and tracks a gradient (queryable via grad()).
  Var variable(Tensor value);
  /// Leaf without a gradient.
  Var constant(Tensor value);

  const Tensor& value(Var v) const;
  bool requires_grad(Var v) const;

  /// Seeds d(loss)/d(loss) = 1 and runs every recorded closure in reverse.
  void backward(Var loss);

  /// Gradient of the last backward() loss with respect to `v`.
  /// Throws if `v` was not recorded on this tape or no backward() ran yet.
  const Tensor& grad(Var v) const;

  std::size_t size() const noexcept { return nodes_.size(); }

  // Op-implementation interface.
  Var record(Tensor value, std::initializer_list<Var> inputs, Backward backward);
  Var record(Tensor value, std::span<const Var> inputs, Backward backward);
  /// Lazily allocated gradient accumulator of a node (the sink for parameters).
  Tensor& grad_buffer(std::uint32_t index);
  bool has_grad(std::uint32_t index) const;
  const Tensor& value_at(std::uint32_t index) const;
  bool requires_grad_at(std::uint32_t index) const { return nodes_[index].requires_grad; }

 private:
  struct Node {
    Tensor value;
    const Tensor* external = nullptr;
    Tensor grad;
    Tensor* sink = nullptr;
    bool requires_grad = false;
    bool grad_ready = false;
    Backward backward;
  };

  void check(Var v) const;

  std::uint64_t id_;
  std::deque<Node> nodes_;
  bool backward_done_ = false;
};

namespace ops {

/// x[n] * W[n x m] -> [m]
Var vecmat(Tape& t, Var x, Var w);
/// A[r x n] * B[n x m] -> [r x m]
Var matmul(Tape& t, Var a, Var b);
Var add(Tape& t, Var a, Var b);
Var mul(Tape& t, Var a, Var b);
Var scale(Tape& t, Var a, double k);
Var concat(Tape& t, Var a, Var b);
Var slice(Tape& t, Var a, std::size_t offset, std::size_t length);
/// Row `index` of matrix W as a vector (embedding lookup).
Var row(Tape& t, Var w, std::size_t index);
/// Stacks equal-length vectors into a matrix, one per row.
Var stack_rows(Tape& t, std::span<const Var> rows);
Var tanh(Tape& t, Var a);
Var sigmoid(Tape& t, Var a);
Var softmax(Tape& t, Var a);
/// Fused LSTM nonlinearity: z[4H], c_prev[H] -> [h | c] of length 2H.
Var lstm_gates(Tape& t, Var z, Var c_prev);
/// e_i = sum_a v_a * tanh(query_a + keys_ia) for query[A], keys[n x A], v[A].
Var additive_scores(Tape& t, Var query, Var keys, Var v);
/// Scalar -log softmax(logits)[target], clamped at kMinProbability.
Var softmax_cross_entropy(Tape& t, Var logits, std::size_t target);
/// Scalar sum_i softplus(z_i) - y_i z_i (binary cross-entropy on logits).
Var sigmoid_binary_cross_entropy(Tape& t, Var logits, const Tensor& targets);
Var sum(Tape& t, Var a);
Var add_scalars(Tape& t, std::span<const Var> scalars);
Var dot(Tape& t, Var a, Var b);

}  // namespace ops

}  // namespace seqnlg::nn

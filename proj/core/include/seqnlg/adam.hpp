#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "seqnlg/tensor.hpp"

namespace seqnlg::nn {

struct AdamConfig {
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Moment accumulators for a fixed list of parameter tensors.
class AdamState {
 public:
  AdamState() = default;
  AdamState(std::span<Tensor* const> params, AdamConfig config);

  const AdamConfig& config() const noexcept { return config_; }
  std::uint64_t step() const noexcept { return step_; }
  const std::vector<Tensor>& first_moments() const noexcept { return m_; }
  const std::vector<Tensor>& second_moments() const noexcept { return v_; }

  /// Bias-corrected Adam step. Returns false, leaving parameters, moments and
  /// the step counter untouched, if any gradient is not finite.
  bool update(std::span<Tensor* const> params, std::span<const Tensor* const> grads);

 private:
  AdamConfig config_;
  std::uint64_t step_ = 0;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
};

}  // namespace seqnlg::nn

#include "seqnlg/adam.hpp"

#include <spdlog/spdlog.h>

#include <cmath>

#include "seqnlg/errors.hpp"

namespace seqnlg::nn {

AdamState::AdamState(std::span<Tensor* const> params, AdamConfig config) : config_(config) {
  m_.reserve(params.size());
  v_.reserve(params.size());
  for (const Tensor* p : params) {
    m_.push_back(Tensor::zeros_like(*p));
    v_.push_back(Tensor::zeros_like(*p));
  }
}

bool AdamState::update(std::span<Tensor* const> params, std::span<const Tensor* const> grads) {
  if (params.size() != m_.size() || grads.size() != m_.size()) {
    throw ShapeError("adam: state tracks " + std::to_string(m_.size()) + " tensors, got " +
                     std::to_string(params.size()) + " parameters and " +
                     std::to_string(grads.size()) + " gradients");
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (!params[k]->same_shape(m_[k]) || !grads[k]->same_shape(m_[k])) {
      throw ShapeError("adam: tensor " + std::to_string(k) + " has shape " +
                       params[k]->shape_string() + " / gradient " + grads[k]->shape_string() +
                       ", accumulators are " + m_[k].shape_string());
    }
    if (!grads[k]->all_finite()) {
      spdlog::warn("adam: non-finite gradient in tensor {}; update skipped at step {}", k, step_);
      return false;
    }
  }

  ++step_;
  const double b1 = config_.beta1;
  const double b2 = config_.beta2;
  const double correction1 = 1.0 - std::pow(b1, static_cast<double>(step_));
  const double correction2 = 1.0 - std::pow(b2, static_cast<double>(step_));
  for (std::size_t k = 0; k < params.size(); ++k) {
    double* p = params[k]->data();
    const double* g = grads[k]->data();
    double* m = m_[k].data();
    double* v = v_[k].data();
    const std::size_t n = params[k]->size();
    for (std::size_t i = 0; i < n; ++i) {
      m[i] = b1 * m[i] + (1.0 - b1) * g[i];
      v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      p[i] -= config_.learning_rate * m_hat / (std::sqrt(v_hat) + config_.epsilon);
    }
  }
  return true;
}

}  // namespace seqnlg::nn

#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "oel/errors.hpp"
#include "oel/nn/param_tensor.hpp"

namespace oel::nn {

template <typename Scalar>
struct LossResult {
  Scalar value = 0;
  Matrix<Scalar> grad;  // d(value)/d(prediction), same shape as the prediction
};

// value = (1/B) sum_b w_b * 0.5 * ||pred_b - target_b||^2. Empty weights
// mean all ones.
template <typename Scalar>
LossResult<Scalar> half_squared_error(const Matrix<Scalar>& pred, const Matrix<Scalar>& target,
                                      std::span<const Scalar> weights = {}) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols())
    throw ConfigError("half_squared_error: shape mismatch");
  if (!weights.empty() && static_cast<Index>(weights.size()) != pred.cols())
    throw ConfigError("half_squared_error: weight count mismatch");
  const Scalar inv_b = Scalar(1) / static_cast<Scalar>(pred.cols());
  LossResult<Scalar> out;
  out.grad = pred - target;
  Scalar total = 0;
  for (Index b = 0; b < pred.cols(); ++b) {
    const Scalar w = weights.empty() ? Scalar(1) : weights[b];
    total += w * Scalar(0.5) * out.grad.col(b).squaredNorm();
    out.grad.col(b) *= w * inv_b;
  }
  out.value = total * inv_b;
  return out;
}

// Mean softmax cross-entropy of logits (classes x B) against integer labels.
template <typename Scalar>
LossResult<Scalar> softmax_cross_entropy(const Matrix<Scalar>& logits, std::span<const int> labels) {
  if (static_cast<Index>(labels.size()) != logits.cols())
    throw ConfigError("softmax_cross_entropy: label count mismatch");
  const Scalar inv_b = Scalar(1) / static_cast<Scalar>(logits.cols());
  LossResult<Scalar> out;
  out.grad.resize(logits.rows(), logits.cols());
  Scalar total = 0;
  for (Index b = 0; b < logits.cols(); ++b) {
    const int label = labels[b];
    if (label < 0 || label >= logits.rows())
      throw ConfigError("softmax_cross_entropy: label out of range");
    const Scalar m = logits.col(b).maxCoeff();
    const auto shifted = (logits.col(b).array() - m).eval();
    const Scalar log_z = std::log(shifted.exp().sum());
    total += log_z - shifted(label);
    out.grad.col(b) = (shifted - log_z).exp().matrix();
    out.grad(label, b) -= Scalar(1);
    out.grad.col(b) *= inv_b;
  }
  out.value = total * inv_b;
  return out;
}

}  // namespace oel::nn

#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "oel/errors.hpp"
#include "oel/nn/loss.hpp"
#include "oel/nn/network.hpp"
#include "oel/nn/optimizer.hpp"
#include "oel/transition.hpp"

namespace oel {

// Index of the largest entry; ties go to the lowest index.
template <typename Derived>
int argmax_lowest(const Eigen::MatrixBase<Derived>& v) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(v.size()); ++i)
    if (v(i) > v(best)) best = i;
  return best;
}

struct DqnUpdate {
  double loss = 0.0;
  std::vector<double> td_errors;  // |y - Q(s, a)| per sample
};

// Double-DQN bootstrap targets: y = r + gamma * Q_target(s', argmax_a Q_online(s', a)),
// and y = r on terminal transitions.
template <typename Scalar>
std::vector<Scalar> double_dqn_targets(const nn::Network<Scalar>& online, const nn::Network<Scalar>& target,
                                       const Batch& batch, double gamma) {
  const nn::Matrix<Scalar> next = batch.next_obs.template cast<Scalar>();
  const nn::Matrix<Scalar> q_online_next = online.predict(next);
  const nn::Matrix<Scalar> q_target_next = target.predict(next);
  std::vector<Scalar> y(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto col = static_cast<nn::Index>(i);
    y[i] = static_cast<Scalar>(batch.rewards[i]);
    if (!batch.terminals[i]) {
      const int a_star = argmax_lowest(q_online_next.col(col));
      y[i] += static_cast<Scalar>(gamma) * q_target_next(a_star, col);
    }
  }
  return y;
}

// One gradient step on `online` minimizing the (optionally importance
// weighted) half squared TD error of the taken actions.
template <typename Scalar>
DqnUpdate double_dqn_step(nn::Network<Scalar>& online, const nn::Network<Scalar>& target,
                          nn::Adam<Scalar>& optimizer, const Batch& batch, double gamma,
                          std::span<const Scalar> weights = {}) {
  if (batch.size() == 0) throw PreconditionError("double_dqn_step: empty batch");
  const std::vector<Scalar> y = double_dqn_targets(online, target, batch, gamma);
  const nn::Matrix<Scalar> q = online.forward(batch.obs.template cast<Scalar>());
  nn::Matrix<Scalar> wanted = q;
  DqnUpdate out;
  out.td_errors.resize(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto col = static_cast<nn::Index>(i);
    wanted(batch.actions[i], col) = y[i];
    out.td_errors[i] = std::abs(static_cast<double>(y[i] - q(batch.actions[i], col)));
  }
  auto loss = nn::half_squared_error<Scalar>(q, wanted, weights);
  if (!std::isfinite(static_cast<double>(loss.value)))
    throw NumericError("double_dqn_step: non-finite loss " + std::to_string(loss.value));
  online.backward(loss.grad);
  auto params = online.params();
  optimizer.step(params);
  out.loss = static_cast<double>(loss.value);
  return out;
}

}  // namespace oel

#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "oel/env/scroller.hpp"
#include "oel/errors.hpp"
#include "oel/nn/loss.hpp"
#include "oel/nn/network.hpp"
#include "oel/nn/optimizer.hpp"

namespace oel::icm {

struct IcmConfig {
  double beta = 0.2;  // forward-loss weight; inverse loss gets 1 - beta
  double eta = 1.0;   // intrinsic reward scale
  nn::Index feature_dim = 32;
  std::vector<nn::Index> encoder_hidden{128, 64};
  std::vector<nn::Index> inverse_hidden{64};
  std::vector<nn::Index> forward_hidden{64};
  double learning_rate = 1e-4;
};

struct IcmLosses {
  double forward_loss = 0.0;
  double inverse_loss = 0.0;
};

// Intrinsic Curiosity Module. The encoder maps a stacked observation to a
// feature vector phi; the inverse head predicts a_t from (phi_t, phi_t+1);
// the forward head predicts phi_t+1 from (phi_t, one-hot a_t). Only the
// inverse loss trains the encoder.
template <typename Scalar = float>
class Icm {
 public:
  using Mat = nn::Matrix<Scalar>;
  using Vec = nn::Vector<Scalar>;

  Icm(nn::Index observation_dim, IcmConfig config, Rng& rng)
      : config_(std::move(config)), optimizer_(nn::AdamConfig{config_.learning_rate}) {
    if (config_.beta < 0.0 || config_.beta > 1.0) throw ConfigError("icm beta must be in [0, 1]");
    if (!(config_.eta > 0.0)) throw ConfigError("icm eta must be > 0");
    if (config_.feature_dim <= 0) throw ConfigError("icm feature_dim must be positive");
    const nn::Index f = config_.feature_dim;
    encoder_ = nn::make_mlp<Scalar>({observation_dim, config_.encoder_hidden, f}, rng);
    inverse_ = nn::make_mlp<Scalar>({2 * f, config_.inverse_hidden, env::kNumActions}, rng);
    forward_ = nn::make_mlp<Scalar>({f + env::kNumActions, config_.forward_hidden, f}, rng);
  }

  const IcmConfig& config() const { return config_; }
  void set_eta(double eta) { config_.eta = eta; }
  void set_beta(double beta) { config_.beta = beta; }

  nn::Network<Scalar>& encoder() { return encoder_; }
  nn::Network<Scalar>& inverse_model() { return inverse_; }
  nn::Network<Scalar>& forward_model() { return forward_; }
  const nn::Network<Scalar>& encoder() const { return encoder_; }
  const nn::Network<Scalar>& forward_model() const { return forward_; }

  Mat features(const Mat& obs) const { return encoder_.predict(obs); }

  Mat forward_input(const Mat& phi, std::span<const int> actions) const {
    Mat in = Mat::Zero(phi.rows() + env::kNumActions, phi.cols());
    in.topRows(phi.rows()) = phi;
    for (nn::Index b = 0; b < phi.cols(); ++b) in(phi.rows() + actions[b], b) = Scalar(1);
    return in;
  }

  // r = (eta / 2) * ||phi_hat_t+1 - phi(s_t+1)||^2 per column. No update.
  Vec intrinsic_rewards(const Mat& obs, std::span<const int> actions, const Mat& next_obs) const {
    check_actions(actions, obs.cols());
    const Mat phi = features(obs);
    const Mat phi_next = features(next_obs);
    const Mat pred = forward_.predict(forward_input(phi, actions));
    return (Scalar(0.5 * config_.eta) * (pred - phi_next).colwise().squaredNorm()).transpose();
  }

  Scalar intrinsic_reward(const Vec& obs, int action, const Vec& next_obs) const {
    const int a[1] = {action};
    return intrinsic_rewards(Mat(obs), a, Mat(next_obs))(0);
  }

  // Accumulates gradients of beta * forward + (1 - beta) * inverse into all
  // three networks without stepping the optimizer.
  IcmLosses accumulate_gradients(const Mat& obs, std::span<const int> actions, const Mat& next_obs) {
    const nn::Index n = obs.cols();
    if (n == 0) throw PreconditionError("icm update: empty batch");
    check_actions(actions, n);
    const nn::Index f = config_.feature_dim;
    const Scalar beta = static_cast<Scalar>(config_.beta);

    Mat both(obs.rows(), 2 * n);
    both.leftCols(n) = obs;
    both.rightCols(n) = next_obs;
    const Mat phi = encoder_.forward(both);

    Mat inv_in(2 * f, n);
    inv_in.topRows(f) = phi.leftCols(n);
    inv_in.bottomRows(f) = phi.rightCols(n);
    const Mat logits = inverse_.forward(inv_in);
    auto inv = nn::softmax_cross_entropy<Scalar>(logits, actions);

    // The forward head sees phi as a constant: its input gradient is dropped.
    const Mat phi_next = phi.rightCols(n);
    const Mat pred = forward_.forward(forward_input(phi.leftCols(n), actions));
    auto fwd = nn::half_squared_error<Scalar>(pred, phi_next);

    if (!std::isfinite(static_cast<double>(inv.value)) || !std::isfinite(static_cast<double>(fwd.value)))
      throw NumericError("icm: non-finite loss (forward " + std::to_string(fwd.value) + ", inverse " +
                         std::to_string(inv.value) + ")");

    forward_.backward(beta * fwd.grad);
    const Mat d_inv_in = inverse_.backward((Scalar(1) - beta) * inv.grad);
    Mat d_phi(f, 2 * n);
    d_phi.leftCols(n) = d_inv_in.topRows(f);
    d_phi.rightCols(n) = d_inv_in.bottomRows(f);
    encoder_.backward(d_phi);
    return {static_cast<double>(fwd.value), static_cast<double>(inv.value)};
  }

  IcmLosses update(const Mat& obs, std::span<const int> actions, const Mat& next_obs) {
    const IcmLosses losses = accumulate_gradients(obs, actions, next_obs);
    auto params = all_params();
    optimizer_.step(params);
    return losses;
  }

  std::vector<nn::ParamTensor<Scalar>*> all_params() {
    std::vector<nn::ParamTensor<Scalar>*> out = encoder_.params();
    for (auto* p : inverse_.params()) out.push_back(p);
    for (auto* p : forward_.params()) out.push_back(p);
    return out;
  }

  void zero_grad() {
    encoder_.zero_grad();
    inverse_.zero_grad();
    forward_.zero_grad();
  }

 private:
  static void check_actions(std::span<const int> actions, nn::Index n) {
    if (static_cast<nn::Index>(actions.size()) != n) throw ConfigError("icm: action count mismatch");
    for (int a : actions)
      if (a < 0 || a >= env::kNumActions) throw ConfigError("icm: action index out of range");
  }

  IcmConfig config_;
  nn::Network<Scalar> encoder_;
  nn::Network<Scalar> inverse_;
  nn::Network<Scalar> forward_;
  nn::Adam<Scalar> optimizer_;
};

}  // namespace oel::icm

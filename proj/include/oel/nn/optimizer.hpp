#pragma once

#include <cmath>
#include <span>
#include <sstream>
#include <vector>

#include "oel/errors.hpp"
#include "oel/nn/param_tensor.hpp"

namespace oel::nn {

namespace detail {

template <typename Scalar>
void require_finite_grads(std::span<ParamTensor<Scalar>* const> params) {
  for (std::size_t k = 0; k < params.size(); ++k) {
    const auto& g = params[k]->grad;
    if ((g.array() * Scalar(0)).sum() == Scalar(0)) continue;  // NaN or inf poisons the sum
    for (Index i = 0; i < g.size(); ++i) {
      if (!std::isfinite(static_cast<double>(g.data()[i]))) {
        std::ostringstream msg;
        msg << "non-finite gradient in parameter #" << k << " (" << params[k]->name << ") at flat index "
            << i << ": " << g.data()[i];
        throw NumericError(msg.str());
      }
    }
  }
}

}  // namespace detail

// Plain gradient descent: w <- w - lr * g.
template <typename Scalar>
class Sgd {
 public:
  explicit Sgd(double learning_rate) : lr_(learning_rate) {}

  void step(std::span<ParamTensor<Scalar>* const> params) {
    detail::require_finite_grads(params);
    for (auto* p : params) {
      p->values -= static_cast<Scalar>(lr_) * p->grad;
      p->zero_grad();
    }
  }

  double learning_rate() const { return lr_; }

 private:
  double lr_;
};

struct AdamConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Adaptive moment estimation. Moment buffers are bound to the parameter
// order of the first step() call.
template <typename Scalar>
class Adam {
 public:
  explicit Adam(AdamConfig config = {}) : config_(config) {}

  void step(std::span<ParamTensor<Scalar>* const> params) {
    detail::require_finite_grads(params);
    if (m_.empty()) {
      for (auto* p : params) {
        m_.push_back(Matrix<Scalar>::Zero(p->values.rows(), p->values.cols()));
        v_.push_back(Matrix<Scalar>::Zero(p->values.rows(), p->values.cols()));
      }
    }
    if (m_.size() != params.size()) throw ConfigError("Adam::step: parameter list changed");
    ++t_;
    const Scalar b1 = static_cast<Scalar>(config_.beta1);
    const Scalar b2 = static_cast<Scalar>(config_.beta2);
    const Scalar lr_t = static_cast<Scalar>(config_.learning_rate *
                                            std::sqrt(1.0 - std::pow(config_.beta2, t_)) /
                                            (1.0 - std::pow(config_.beta1, t_)));
    const Scalar eps = static_cast<Scalar>(config_.epsilon);
    for (std::size_t k = 0; k < params.size(); ++k) {
      auto* p = params[k];
      m_[k] = b1 * m_[k] + (Scalar(1) - b1) * p->grad;
      v_[k] = b2 * v_[k] + (Scalar(1) - b2) * p->grad.cwiseAbs2();
      p->values.array() -= lr_t * m_[k].array() / (v_[k].array().sqrt() + eps);
      p->zero_grad();
    }
  }

  void set_learning_rate(double lr) { config_.learning_rate = lr; }
  const AdamConfig& config() const { return config_; }
  long steps() const { return t_; }

 private:
  AdamConfig config_;
  std::vector<Matrix<Scalar>> m_;
  std::vector<Matrix<Scalar>> v_;
  long t_ = 0;
};

}  // namespace oel::nn

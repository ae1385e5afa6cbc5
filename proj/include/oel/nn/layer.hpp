#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "oel/errors.hpp"
#include "oel/nn/param_tensor.hpp"
#include "oel/random.hpp"

namespace oel::nn {

enum class Activation : std::uint8_t { identity = 0, relu = 1 };
enum class LayerKind : std::uint8_t { dense = 0, noisy = 1 };

// Factorized noise draws one Gaussian per input and per output unit and
// combines them through f(x) = sign(x) sqrt(|x|); independent noise draws
// one Gaussian per weight.
enum class NoiseKind : std::uint8_t { factorized = 0, independent = 1 };

// Fully connected layer. Activations are column-major batches: each column
// is one sample. A noisy layer carries (mu, sigma) pairs and a sampled
// epsilon; its effective weight is mu + sigma * epsilon while noise is
// enabled and exactly mu otherwise.
template <typename Scalar>
class Layer {
 public:
  using Mat = Matrix<Scalar>;
  using Vec = Vector<Scalar>;

  Layer() = default;

  static Layer dense(Index in, Index out, Activation act, Rng& rng) {
    Layer layer(LayerKind::dense, in, out, act, NoiseKind::factorized);
    layer.init_uniform(rng);
    return layer;
  }

  static Layer noisy(Index in, Index out, Activation act, Rng& rng,
                     NoiseKind noise = NoiseKind::factorized, double sigma0 = 0.5) {
    Layer layer(LayerKind::noisy, in, out, act, noise);
    layer.init_uniform(rng);
    const Scalar sigma = static_cast<Scalar>(sigma0 / std::sqrt(static_cast<double>(in)));
    layer.sigma_w_.values.setConstant(sigma);
    layer.sigma_b_.values.setConstant(sigma);
    layer.eps_w_ = Mat::Zero(out, in);
    layer.eps_b_ = Vec::Zero(out);
    return layer;
  }

  LayerKind kind() const { return kind_; }
  Activation activation() const { return act_; }
  NoiseKind noise_kind() const { return noise_kind_; }
  Index input_dim() const { return in_; }
  Index output_dim() const { return out_; }
  bool noise_enabled() const { return kind_ == LayerKind::noisy && noise_enabled_; }
  void set_noise_enabled(bool enabled) { noise_enabled_ = enabled; }

  Mat effective_weight() const {
    if (!noise_enabled()) return weight_.values;
    return weight_.values + sigma_w_.values.cwiseProduct(eps_w_);
  }
  Vec effective_bias() const {
    if (!noise_enabled()) return bias_.values.col(0);
    return bias_.values.col(0) + sigma_b_.values.col(0).cwiseProduct(eps_b_);
  }

  // Forward pass without touching the backward cache.
  Mat predict(const Mat& x) const {
    check_input(x);
    Mat z;
    if (noise_enabled()) {
      z = effective_weight() * x;
      z.colwise() += effective_bias();
    } else {
      z = weight_.values * x;
      z.colwise() += bias_.values.col(0);
    }
    apply_activation(z);
    return z;
  }

  Mat forward(const Mat& x) {
    check_input(x);
    input_ = x;
    used_weight_ = effective_weight();
    preact_ = used_weight_ * x;
    preact_.colwise() += effective_bias();
    has_cache_ = true;
    Mat y = preact_;
    apply_activation(y);
    return y;
  }

  // Accumulates parameter gradients and returns d(loss)/d(input).
  Mat backward(const Mat& dy) {
    if (!has_cache_) throw UsageError("Layer::backward called without a cached forward pass");
    if (dy.rows() != out_ || dy.cols() != input_.cols())
      throw ConfigError("Layer::backward: gradient shape mismatch");
    Mat dz = dy;
    if (act_ == Activation::relu) dz = (preact_.array() > Scalar(0)).select(dz, Scalar(0));
    const Mat dw = dz * input_.transpose();
    const Vec db = dz.rowwise().sum();
    weight_.grad += dw;
    bias_.grad.col(0) += db;
    if (noise_enabled()) {
      sigma_w_.grad += dw.cwiseProduct(eps_w_);
      sigma_b_.grad.col(0) += db.cwiseProduct(eps_b_);
    }
    has_cache_ = false;
    return used_weight_.transpose() * dz;
  }

  bool has_cache() const { return has_cache_; }

  void resample_noise(Rng& rng) {
    if (kind_ != LayerKind::noisy) return;
    std::normal_distribution<double> normal(0.0, 1.0);
    if (noise_kind_ == NoiseKind::factorized) {
      Vec e_in(in_), e_out(out_);
      for (Index i = 0; i < in_; ++i) e_in(i) = scale_noise(normal(rng));
      for (Index o = 0; o < out_; ++o) e_out(o) = scale_noise(normal(rng));
      eps_w_ = e_out * e_in.transpose();
      eps_b_ = e_out;
    } else {
      for (Index c = 0; c < in_; ++c)
        for (Index r = 0; r < out_; ++r) eps_w_(r, c) = static_cast<Scalar>(normal(rng));
      for (Index o = 0; o < out_; ++o) eps_b_(o) = static_cast<Scalar>(normal(rng));
    }
  }

  const Mat& epsilon_weight() const { return eps_w_; }
  const Vec& epsilon_bias() const { return eps_b_; }

  // Parameter order is fixed: weight (mu), bias (mu), then sigma_w, sigma_b.
  std::vector<ParamTensor<Scalar>*> params() {
    std::vector<ParamTensor<Scalar>*> out{&weight_, &bias_};
    if (kind_ == LayerKind::noisy) {
      out.push_back(&sigma_w_);
      out.push_back(&sigma_b_);
    }
    return out;
  }
  std::vector<const ParamTensor<Scalar>*> params() const {
    std::vector<const ParamTensor<Scalar>*> out{&weight_, &bias_};
    if (kind_ == LayerKind::noisy) {
      out.push_back(&sigma_w_);
      out.push_back(&sigma_b_);
    }
    return out;
  }

  ParamTensor<Scalar>& weight() { return weight_; }
  ParamTensor<Scalar>& bias() { return bias_; }
  ParamTensor<Scalar>& sigma_weight() { return sigma_w_; }
  ParamTensor<Scalar>& sigma_bias() { return sigma_b_; }
  const ParamTensor<Scalar>& weight() const { return weight_; }
  const ParamTensor<Scalar>& bias() const { return bias_; }

  // Used by checkpoint loading; shapes come from the manifest.
  static Layer with_shape(LayerKind kind, Index in, Index out, Activation act, NoiseKind noise) {
    Layer layer(kind, in, out, act, noise);
    if (kind == LayerKind::noisy) {
      layer.eps_w_ = Mat::Zero(out, in);
      layer.eps_b_ = Vec::Zero(out);
    }
    return layer;
  }

 private:
  Layer(LayerKind kind, Index in, Index out, Activation act, NoiseKind noise)
      : kind_(kind),
        act_(act),
        noise_kind_(noise),
        in_(in),
        out_(out),
        weight_(kind == LayerKind::noisy ? "mu_w" : "w", out, in),
        bias_(kind == LayerKind::noisy ? "mu_b" : "b", out, 1) {
    if (in <= 0 || out <= 0) throw ConfigError("Layer dimensions must be positive");
    if (kind == LayerKind::noisy) {
      sigma_w_ = ParamTensor<Scalar>("sigma_w", out, in);
      sigma_b_ = ParamTensor<Scalar>("sigma_b", out, 1);
    }
  }

  void init_uniform(Rng& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(in_));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (Index c = 0; c < in_; ++c)
      for (Index r = 0; r < out_; ++r) weight_.values(r, c) = static_cast<Scalar>(dist(rng));
    for (Index r = 0; r < out_; ++r) bias_.values(r, 0) = static_cast<Scalar>(dist(rng));
  }

  static Scalar scale_noise(double x) {
    return static_cast<Scalar>(x >= 0.0 ? std::sqrt(x) : -std::sqrt(-x));
  }

  void check_input(const Mat& x) const {
    if (x.rows() != in_)
      throw ConfigError("Layer input has " + std::to_string(x.rows()) + " rows, expected " +
                        std::to_string(in_));
  }

  void apply_activation(Mat& z) const {
    if (act_ == Activation::relu) z = z.cwiseMax(Scalar(0));
  }

  LayerKind kind_ = LayerKind::dense;
  Activation act_ = Activation::identity;
  NoiseKind noise_kind_ = NoiseKind::factorized;
  Index in_ = 0;
  Index out_ = 0;
  ParamTensor<Scalar> weight_;
  ParamTensor<Scalar> bias_;
  ParamTensor<Scalar> sigma_w_;
  ParamTensor<Scalar> sigma_b_;
  Mat eps_w_;
  Vec eps_b_;
  bool noise_enabled_ = true;

  Mat input_;
  Mat preact_;
  Mat used_weight_;
  bool has_cache_ = false;
};

}  // namespace oel::nn

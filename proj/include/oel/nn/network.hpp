#pragma once

#include <span>
#include <string>
#include <vector>

#include "oel/errors.hpp"
#include "oel/nn/layer.hpp"

namespace oel::nn {

// Feed-forward stack of dense and noisy-dense layers.
template <typename Scalar>
class Network {
 public:
  using Mat = Matrix<Scalar>;
  using Vec = Vector<Scalar>;

  Network() = default;

  void add(Layer<Scalar> layer) {
    if (!layers_.empty() && layers_.back().output_dim() != layer.input_dim())
      throw ConfigError("Network::add: layer input " + std::to_string(layer.input_dim()) +
                        " does not match previous output " +
                        std::to_string(layers_.back().output_dim()));
    layers_.push_back(std::move(layer));
  }

  Index input_dim() const { return layers_.empty() ? 0 : layers_.front().input_dim(); }
  Index output_dim() const { return layers_.empty() ? 0 : layers_.back().output_dim(); }
  bool empty() const { return layers_.empty(); }

  Mat forward(const Mat& x) {
    require_layers();
    Mat h = x;
    for (auto& layer : layers_) h = layer.forward(h);
    return h;
  }

  Vec forward(const Vec& x) {
    Mat m = x;
    return forward(m).col(0);
  }

  Mat predict(const Mat& x) const {
    require_layers();
    Mat h = layers_.front().predict(x);
    for (std::size_t i = 1; i < layers_.size(); ++i) h = layers_[i].predict(h);
    return h;
  }

  Vec predict(const Vec& x) const {
    Mat m = x;
    return predict(m).col(0);
  }

  // Backpropagates d(loss)/d(output); returns d(loss)/d(input).
  Mat backward(const Mat& dy) {
    require_layers();
    for (const auto& layer : layers_)
      if (!layer.has_cache()) throw UsageError("Network::backward called without forward");
    Mat g = dy;
    for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) g = it->backward(g);
    return g;
  }

  void resample_noise(Rng& rng) {
    for (auto& layer : layers_) layer.resample_noise(rng);
  }

  void set_noise_enabled(bool enabled) {
    for (auto& layer : layers_) layer.set_noise_enabled(enabled);
  }

  bool has_noisy_layers() const {
    for (const auto& layer : layers_)
      if (layer.kind() == LayerKind::noisy) return true;
    return false;
  }

  std::vector<ParamTensor<Scalar>*> params() {
    std::vector<ParamTensor<Scalar>*> out;
    for (auto& layer : layers_)
      for (auto* p : layer.params()) out.push_back(p);
    return out;
  }

  std::vector<const ParamTensor<Scalar>*> params() const {
    std::vector<const ParamTensor<Scalar>*> out;
    for (const auto& layer : layers_)
      for (const auto* p : layer.params()) out.push_back(p);
    return out;
  }

  Index parameter_count() const {
    Index n = 0;
    for (const auto* p : params()) n += p->size();
    return n;
  }

  void zero_grad() {
    for (auto* p : params()) p->zero_grad();
  }

  // Copies parameter values only; noise state and caches stay untouched.
  void copy_params_from(const Network& other) {
    auto dst = params();
    auto src = other.params();
    if (dst.size() != src.size()) throw ConfigError("copy_params_from: architecture mismatch");
    for (std::size_t i = 0; i < dst.size(); ++i) {
      if (dst[i]->shape() != src[i]->shape())
        throw ConfigError("copy_params_from: shape mismatch in " + src[i]->name);
      dst[i]->values = src[i]->values;
    }
  }

  bool params_equal(const Network& other) const {
    auto a = params();
    auto b = other.params();
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
      if (a[i]->shape() != b[i]->shape() || a[i]->values != b[i]->values) return false;
    return true;
  }

  std::vector<Layer<Scalar>>& layers() { return layers_; }
  const std::vector<Layer<Scalar>>& layers() const { return layers_; }

 private:
  void require_layers() const {
    if (layers_.empty()) throw ConfigError("Network has no layers");
  }

  std::vector<Layer<Scalar>> layers_;
};

// Layer widths for a multilayer perceptron. Hidden layers use ReLU, the head
// is linear. The last `noisy_tail` layers are noisy-dense.
struct MlpSpec {
  Index input_dim = 0;
  std::vector<Index> hidden;
  Index output_dim = 0;
  int noisy_tail = 0;
  NoiseKind noise = NoiseKind::factorized;
  double sigma0 = 0.5;
};

template <typename Scalar>
Network<Scalar> make_mlp(const MlpSpec& spec, Rng& rng) {
  std::vector<Index> dims{spec.input_dim};
  dims.insert(dims.end(), spec.hidden.begin(), spec.hidden.end());
  dims.push_back(spec.output_dim);
  const int n_layers = static_cast<int>(dims.size()) - 1;
  if (spec.noisy_tail < 0 || spec.noisy_tail > n_layers)
    throw ConfigError("make_mlp: noisy_tail out of range");
  Network<Scalar> net;
  for (int i = 0; i < n_layers; ++i) {
    const auto act = i + 1 == n_layers ? Activation::identity : Activation::relu;
    if (i >= n_layers - spec.noisy_tail)
      net.add(Layer<Scalar>::noisy(dims[i], dims[i + 1], act, rng, spec.noise, spec.sigma0));
    else
      net.add(Layer<Scalar>::dense(dims[i], dims[i + 1], act, rng));
  }
  return net;
}

}  // namespace oel::nn

#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <sstream>

#include "gradcheck.hpp"
#include "oel/icm/icm.hpp"
#include "oel/nn/checkpoint.hpp"
#include "oel/nn/loss.hpp"
#include "oel/nn/network.hpp"
#include "oel/nn/optimizer.hpp"

using namespace oel;
using nn::Activation;
using nn::Index;
using Md = nn::Matrix<double>;
using Vd = nn::Vector<double>;

TEST(Forward, IdentityLayerPassesInputThrough) {
  Rng rng(1);
  auto layer = nn::Layer<double>::dense(2, 2, Activation::identity, rng);
  layer.weight().values.setIdentity();
  layer.bias().values.setZero();
  nn::Network<double> net;
  net.add(layer);
  Vd x(2);
  x << 0.5, -0.25;
  const Vd y = net.predict(x);
  EXPECT_EQ(y(0), 0.5);
  EXPECT_EQ(y(1), -0.25);
}

TEST(Forward, ZeroWeightsGiveBias) {
  Rng rng(2);
  auto layer = nn::Layer<double>::dense(3, 2, Activation::identity, rng);
  layer.weight().values.setZero();
  layer.bias().values << 0.7, -1.5;
  nn::Network<double> net;
  net.add(layer);
  for (int t = 0; t < 5; ++t) {
    const Vd y = net.predict(Vd(Vd::Random(3)));
    EXPECT_EQ(y(0), 0.7);
    EXPECT_EQ(y(1), -1.5);
  }
}

TEST(Forward, TwoLayerNetMatchesHandEvaluation) {
  Rng rng(3);
  auto net = nn::make_mlp<double>({4, {5}, 3}, rng);
  Vd x(4);
  x << 0.3, -1.2, 0.8, 0.05;
  const auto& l0 = net.layers()[0];
  const auto& l1 = net.layers()[1];
  // Loop-based evaluation, independent of the Eigen expression path.
  std::vector<double> h(5), y(3);
  for (int o = 0; o < 5; ++o) {
    double s = l0.bias().values(o, 0);
    for (int i = 0; i < 4; ++i) s += l0.weight().values(o, i) * x(i);
    h[o] = s > 0 ? s : 0;
  }
  for (int o = 0; o < 3; ++o) {
    double s = l1.bias().values(o, 0);
    for (int i = 0; i < 5; ++i) s += l1.weight().values(o, i) * h[i];
    y[o] = s;
  }
  const Vd got = net.predict(x);
  for (int o = 0; o < 3; ++o) EXPECT_NEAR(got(o), y[o], 1e-12);
}

TEST(Forward, WrongInputSizeIsRejected) {
  Rng rng(4);
  auto net = nn::make_mlp<double>({4, {5}, 3}, rng);
  EXPECT_THROW(net.predict(Vd(Vd::Zero(3))), ConfigError);
}

TEST(Backward, ScalarProduct) {
  Rng rng(5);
  auto layer = nn::Layer<double>::dense(1, 1, Activation::identity, rng);
  layer.weight().values(0, 0) = 3.0;
  layer.bias().values(0, 0) = 0.0;
  Md x(1, 1);
  x(0, 0) = 2.0;
  layer.forward(x);
  layer.backward(Md::Ones(1, 1));
  EXPECT_DOUBLE_EQ(layer.weight().grad(0, 0), 2.0);
  EXPECT_DOUBLE_EQ(layer.bias().grad(0, 0), 1.0);
}

TEST(Backward, ZeroUpstreamGradientGivesZeroGrads) {
  Rng rng(6);
  auto net = nn::make_mlp<double>({6, {8, 8}, 4, 1}, rng);
  net.resample_noise(rng);
  net.forward(Md(Md::Random(6, 5)));
  net.backward(Md::Zero(4, 5));
  for (const auto* p : std::as_const(net).params()) EXPECT_EQ(p->grad.cwiseAbs().maxCoeff(), 0.0) << p->name;
}

TEST(Backward, WithoutForwardIsAUsageError) {
  Rng rng(7);
  auto net = nn::make_mlp<double>({3, {4}, 2}, rng);
  EXPECT_THROW(net.backward(Md::Zero(2, 1)), UsageError);
}

class GradientCheck : public ::testing::TestWithParam<int> {};

// Central differences with step 1e-4 on every parameter (large tensors are
// subsampled) and on the input.
TEST_P(GradientCheck, ThreeLayerDenseNet) {
  Rng rng(100 + GetParam());
  auto net = nn::make_mlp<double>({7, {9, 6}, 4}, rng);
  const auto r = testing_support::check_network_gradients(net, 5, rng);
  EXPECT_LT(r.max_rel_error, 1e-3) << r.worst;
  EXPECT_GT(r.checked, 100);
}

TEST_P(GradientCheck, NoisyNetWithFixedNoise) {
  Rng rng(200 + GetParam());
  auto net = nn::make_mlp<double>({6, {8, 8}, 6, 2}, rng);
  net.resample_noise(rng);
  const auto r = testing_support::check_network_gradients(net, 4, rng);
  EXPECT_LT(r.max_rel_error, 1e-3) << r.worst;
}

TEST_P(GradientCheck, NoisyNetInDeterministicMode) {
  Rng rng(300 + GetParam());
  auto net = nn::make_mlp<double>({6, {8, 8}, 6, 2}, rng);
  net.resample_noise(rng);
  net.set_noise_enabled(false);
  const auto r = testing_support::check_network_gradients(net, 4, rng);
  EXPECT_LT(r.max_rel_error, 1e-3) << r.worst;
  // With noise off the sigma parameters do not enter the output.
  net.zero_grad();
  net.forward(Md(Md::Random(6, 3)));
  net.backward(Md::Ones(6, 3));
  for (auto* p : net.params())
    if (p->name.rfind("sigma", 0) == 0) {
      EXPECT_EQ(p->grad.cwiseAbs().maxCoeff(), 0.0);
    }
}

TEST_P(GradientCheck, SoftmaxCrossEntropy) {
  Rng rng(400 + GetParam());
  Md logits = Md::Random(6, 4) * 3.0;
  std::vector<int> labels{0, 5, 2, 2};
  auto base = nn::softmax_cross_entropy<double>(logits, labels);
  for (Index i = 0; i < logits.size(); ++i) {
    Md lp = logits, lm = logits;
    lp.data()[i] += 1e-4;
    lm.data()[i] -= 1e-4;
    const double fd = (nn::softmax_cross_entropy<double>(lp, labels).value -
                       nn::softmax_cross_entropy<double>(lm, labels).value) / 2e-4;
    EXPECT_LT(testing_support::relative_error(base.grad.data()[i], fd), 1e-3);
  }
}

INSTANTIATE_TEST_SUITE_P(Seeds, GradientCheck, ::testing::Range(0, 4));

TEST(NoisyLayer, ZeroSigmaMeansMuWeights) {
  Rng rng(8);
  auto layer = nn::Layer<double>::noisy(5, 3, Activation::identity, rng, nn::NoiseKind::factorized, 0.0);
  for (int t = 0; t < 10; ++t) {
    layer.resample_noise(rng);
    EXPECT_EQ(layer.effective_weight(), layer.weight().values);
  }
}

TEST(NoisyLayer, SameSeedSameEpsilon) {
  Rng init(9);
  auto a = nn::Layer<double>::noisy(5, 3, Activation::identity, init);
  auto b = a;
  Rng r1(42), r2(42);
  a.resample_noise(r1);
  b.resample_noise(r2);
  EXPECT_EQ(a.epsilon_weight(), b.epsilon_weight());
  EXPECT_EQ(a.epsilon_bias(), b.epsilon_bias());
}

TEST(NoisyLayer, SigmaInitialisation) {
  Rng rng(10);
  auto layer = nn::Layer<double>::noisy(16, 4, Activation::identity, rng, nn::NoiseKind::factorized, 0.5);
  EXPECT_DOUBLE_EQ(layer.sigma_weight().values(0, 0), 0.5 / 4.0);
  EXPECT_DOUBLE_EQ(layer.sigma_bias().values(3, 0), 0.5 / 4.0);
}

// Monte-Carlo variance of one effective weight around its mu.
double weight_variance(nn::NoiseKind kind, double sigma0, int draws) {
  Rng rng(11);
  auto layer = nn::Layer<double>::noisy(4, 3, Activation::identity, rng, kind, sigma0);
  const double mu = layer.weight().values(1, 2);
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < draws; ++i) {
    layer.resample_noise(rng);
    const double d = layer.effective_weight()(1, 2) - mu;
    sum += d;
    sq += d * d;
  }
  const double mean = sum / draws;
  return sq / draws - mean * mean;
}

TEST(NoisyLayer, IndependentNoiseVarianceIsSigmaSquared) {
  const double sigma = 0.5 / 2.0;
  const double v = weight_variance(nn::NoiseKind::independent, 0.5, 10000);
  EXPECT_NEAR(v / (sigma * sigma), 1.0, 0.05);
}

TEST(NoisyLayer, FactorizedNoiseVarianceIsTwoOverPiSigmaSquared) {
  // eps = f(a) f(b) with f(x) = sign(x) sqrt|x|: Var = E|a| E|b| = 2 / pi.
  const double sigma = 0.5 / 2.0;
  const double v = weight_variance(nn::NoiseKind::factorized, 0.5, 10000);
  EXPECT_NEAR(v / (sigma * sigma), 2.0 / M_PI, 0.05);
}

TEST(Optimizer, SgdStep) {
  nn::ParamTensor<double> w("w", 1, 1);
  w.values(0, 0) = 1.0;
  w.grad(0, 0) = 0.5;
  nn::Sgd<double> sgd(0.1);
  std::vector<nn::ParamTensor<double>*> ps{&w};
  sgd.step(ps);
  EXPECT_DOUBLE_EQ(w.values(0, 0), 0.95);
  EXPECT_EQ(w.grad(0, 0), 0.0);
}

TEST(Optimizer, ZeroGradLeavesParamsUnchanged) {
  nn::ParamTensor<double> w("w", 2, 3);
  w.values.setConstant(0.25);
  std::vector<nn::ParamTensor<double>*> ps{&w};
  nn::Sgd<double> sgd(0.1);
  sgd.step(ps);
  nn::Adam<double> adam;
  adam.step(ps);
  EXPECT_TRUE((w.values.array() == 0.25).all());
}

// Bias corrections folded into the step size, epsilon added to sqrt(v).
TEST(Optimizer, AdamMatchesScalarReference) {
  nn::ParamTensor<double> w("w", 1, 2);
  w.values << 0.3, -0.7;
  nn::AdamConfig cfg{0.01, 0.9, 0.999, 1e-8};
  nn::Adam<double> adam(cfg);
  std::vector<nn::ParamTensor<double>*> ps{&w};
  double ref[2] = {0.3, -0.7}, m[2] = {0, 0}, v[2] = {0, 0};
  const double grads[3][2] = {{0.5, -1.0}, {0.1, 0.2}, {-0.3, 0.0}};
  for (int t = 1; t <= 3; ++t) {
    w.grad << grads[t - 1][0], grads[t - 1][1];
    adam.step(ps);
    for (int i = 0; i < 2; ++i) {
      const double g = grads[t - 1][i];
      m[i] = 0.9 * m[i] + 0.1 * g;
      v[i] = 0.999 * v[i] + 0.001 * g * g;
      const double step = 0.01 * std::sqrt(1 - std::pow(0.999, t)) / (1 - std::pow(0.9, t));
      ref[i] -= step * m[i] / (std::sqrt(v[i]) + 1e-8);
    }
    EXPECT_NEAR(w.values(0, 0), ref[0], 1e-9);
    EXPECT_NEAR(w.values(0, 1), ref[1], 1e-9);
  }
}

TEST(Optimizer, QuadraticBowlLossDecreases) {
  Rng rng(12);
  auto net = nn::make_mlp<double>({3, {}, 2}, rng);
  const Md x = Md::Random(3, 16);
  const Md target = Md::Random(2, 16);
  nn::Sgd<double> sgd(0.05);
  double prev = 1e300;
  for (int i = 0; i < 100; ++i) {
    auto loss = nn::half_squared_error<double>(net.forward(x), target);
    EXPECT_LT(loss.value, prev) << "step " << i;
    prev = loss.value;
    net.backward(loss.grad);
    auto ps = net.params();
    sgd.step(ps);
  }
}

TEST(Optimizer, NonFiniteGradientNamesTheParameter) {
  nn::ParamTensor<double> w("layer3.w", 2, 2);
  w.grad(1, 0) = std::numeric_limits<double>::quiet_NaN();
  std::vector<nn::ParamTensor<double>*> ps{&w};
  nn::Adam<double> adam;
  try {
    adam.step(ps);
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("layer3.w"), std::string::npos);
  }
}

TEST(Loss, WeightedHalfSquaredError) {
  Md pred(1, 2), target(1, 2);
  pred << 1.0, 3.0;
  target << 0.0, 1.0;
  const std::vector<double> w{1.0, 0.5};
  auto l = nn::half_squared_error<double>(pred, target, w);
  EXPECT_DOUBLE_EQ(l.value, (0.5 * 1.0 + 0.5 * 0.5 * 4.0) / 2.0);
  EXPECT_DOUBLE_EQ(l.grad(0, 0), 0.5);
  EXPECT_DOUBLE_EQ(l.grad(0, 1), 0.5);
}

TEST(Checkpoint, RoundTripIsBitExact) {
  Rng rng(13);
  auto net = nn::make_mlp<float>({10, {7, 5}, 3, 2}, rng);
  std::stringstream ss;
  nn::save_checkpoint(ss, net, 77);
  auto loaded = nn::load_checkpoint<float>(ss);
  EXPECT_EQ(loaded.seed, 77u);
  EXPECT_TRUE(loaded.net.params_equal(net));
  ASSERT_EQ(loaded.net.layers().size(), net.layers().size());
  for (std::size_t i = 0; i < net.layers().size(); ++i) {
    EXPECT_EQ(loaded.net.layers()[i].kind(), net.layers()[i].kind());
    EXPECT_EQ(loaded.net.layers()[i].activation(), net.layers()[i].activation());
  }
  net.set_noise_enabled(false);
  loaded.net.set_noise_enabled(false);
  const nn::Vector<float> x = nn::Vector<float>::Random(10);
  EXPECT_EQ(net.predict(x), loaded.net.predict(x));
}

TEST(Checkpoint, CorruptDataIsRejected) {
  Rng rng(14);
  auto net = nn::make_mlp<float>({4, {3}, 2}, rng);
  std::stringstream ss;
  nn::save_checkpoint(ss, net, 1);
  std::string bytes = ss.str();
  std::string bad_magic = bytes;
  bad_magic[0] = 'X';
  std::stringstream a(bad_magic);
  EXPECT_THROW(nn::load_checkpoint<float>(a), ConfigError);
  std::stringstream b(bytes.substr(0, bytes.size() - 5));
  EXPECT_THROW(nn::load_checkpoint<float>(b), ConfigError);
  std::stringstream c(bytes);
  EXPECT_THROW(nn::load_checkpoint<double>(c), ConfigError);
}

TEST(TargetSync, CopyMakesParamsBitEqual) {
  Rng rng(15);
  auto a = nn::make_mlp<float>({6, {5}, 3, 1}, rng);
  auto b = nn::make_mlp<float>({6, {5}, 3, 1}, rng);
  EXPECT_FALSE(a.params_equal(b));
  b.copy_params_from(a);
  EXPECT_TRUE(a.params_equal(b));
}

#include <gtest/gtest.h>

#include <cmath>

#include "icm_gradcheck.hpp"
#include "oel/env/generate.hpp"
#include "oel/icm/icm.hpp"

using namespace oel;
using Md = nn::Matrix<double>;

namespace {

icm::IcmConfig small_config() { return testing_support::small_icm_config(); }
using testing_support::random_matrix;

}  // namespace

TEST(IcmReward, ZeroWhenForwardPredictionIsExact) {
  Rng rng(1);
  auto cfg = small_config();
  icm::Icm<double> m(10, cfg, rng);
  const Md obs = random_matrix(10, 1, rng);
  // Zero every forward weight, then make the bias equal phi(s').
  for (auto& layer : m.forward_model().layers())
    for (auto* p : layer.params()) p->values.setZero();
  const Md next = random_matrix(10, 1, rng);
  m.forward_model().layers().back().params()[1]->values = m.features(next);
  const int a[1] = {2};
  EXPECT_NEAR(m.intrinsic_rewards(obs, a, next)(0), 0.0, 1e-12);
}

TEST(IcmReward, ScalesWithEta) {
  Rng rng(2);
  icm::Icm<double> m(10, small_config(), rng);
  const Md obs = random_matrix(10, 3, rng), next = random_matrix(10, 3, rng);
  const std::vector<int> a{0, 3, 5};
  const auto r1 = m.intrinsic_rewards(obs, a, next);
  m.set_eta(2.0);
  const auto r2 = m.intrinsic_rewards(obs, a, next);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(r2(i), 2.0 * r1(i), 1e-12);
}

TEST(IcmReward, MatchesHandComputation) {
  Rng rng(3);
  icm::Icm<double> m(10, small_config(), rng);
  const Md obs = random_matrix(10, 1, rng), next = random_matrix(10, 1, rng);
  const Md phi = m.features(obs), phi2 = m.features(next);
  Md in = Md::Zero(phi.rows() + env::kNumActions, 1);
  in.topRows(phi.rows()) = phi;
  in(phi.rows() + 4, 0) = 1.0;
  const Md pred = m.forward_model().predict(in);
  double sq = 0.0;
  for (nn::Index i = 0; i < pred.rows(); ++i) sq += (pred(i) - phi2(i)) * (pred(i) - phi2(i));
  const int a[1] = {4};
  EXPECT_NEAR(m.intrinsic_rewards(obs, a, next)(0), 0.5 * sq, 1e-12);
}

TEST(IcmReward, RejectsBadActions) {
  Rng rng(4);
  icm::Icm<double> m(10, small_config(), rng);
  const Md obs = random_matrix(10, 1, rng);
  const int a[1] = {env::kNumActions};
  EXPECT_THROW(m.intrinsic_rewards(obs, a, obs), ConfigError);
}

// The encoder and inverse head must carry the gradient of (1 - beta) times
// the inverse loss only; the forward head carries beta times the forward
// loss with phi held constant.
class IcmGradient : public ::testing::TestWithParam<int> {};

TEST_P(IcmGradient, MatchesFiniteDifferencesWithStopGradient) {
  const auto r = testing_support::check_icm_gradients(static_cast<std::uint64_t>(GetParam()));
  EXPECT_GT(r.inverse.checked, 50);
  EXPECT_GT(r.forward.checked, 30);
  EXPECT_LT(r.inverse.max_rel_error, 1e-3) << r.inverse.worst;
  EXPECT_LT(r.forward.max_rel_error, 1e-3) << r.forward.worst;
}

INSTANTIATE_TEST_SUITE_P(Seeds, IcmGradient, ::testing::Values(1, 2, 3));

TEST(IcmGradient, BetaOneLeavesInverseAndEncoderUntouched) {
  Rng rng(7);
  auto cfg = small_config();
  cfg.beta = 1.0;
  icm::Icm<double> m(9, cfg, rng);
  const Md obs = random_matrix(9, 4, rng), next = random_matrix(9, 4, rng);
  m.zero_grad();
  m.accumulate_gradients(obs, std::vector<int>{0, 1, 2, 3}, next);
  for (auto* p : m.encoder().params()) EXPECT_EQ(p->grad.norm(), 0.0);
  for (auto* p : m.inverse_model().params()) EXPECT_EQ(p->grad.norm(), 0.0);
  double fwd = 0.0;
  for (auto* p : m.forward_model().params()) fwd += p->grad.norm();
  EXPECT_GT(fwd, 0.0);
}

TEST(IcmGradient, BetaZeroLeavesForwardUntouched) {
  Rng rng(8);
  auto cfg = small_config();
  cfg.beta = 0.0;
  icm::Icm<double> m(9, cfg, rng);
  const Md obs = random_matrix(9, 4, rng), next = random_matrix(9, 4, rng);
  m.zero_grad();
  m.accumulate_gradients(obs, std::vector<int>{0, 1, 2, 3}, next);
  for (auto* p : m.forward_model().params()) EXPECT_EQ(p->grad.norm(), 0.0);
}

namespace {

struct FixedTransition {
  Md obs, next;
  std::vector<int> actions;
};

FixedTransition jump_right_from_origin() {
  const env::EnvConfig ecfg;
  const auto level = env::generate_level(2, env::Difficulty{});
  env::Session s = env::reset(level, 0, ecfg);
  FixedTransition t{Md(ecfg.observation_dim(), 1), Md(ecfg.observation_dim(), 1), {4}};
  for (int k = 0; k < ecfg.observation_dim(); ++k) t.obs(k, 0) = s.obs.values[k];
  env::step(level, s, env::Action::jump_right, 4, ecfg);
  for (int k = 0; k < ecfg.observation_dim(); ++k) t.next(k, 0) = s.obs.values[k];
  return t;
}

std::vector<double> forward_losses(const icm::IcmConfig& cfg, int updates, std::uint64_t seed) {
  const auto t = jump_right_from_origin();
  Rng rng(seed);
  icm::Icm<double> m(t.obs.rows(), cfg, rng);
  std::vector<double> losses;
  for (int i = 0; i < updates; ++i) losses.push_back(m.update(t.obs, t.actions, t.next).forward_loss);
  return losses;
}

}  // namespace

// beta = 1 freezes the encoder, so the forward head chases a fixed target.
TEST(IcmTraining, ForwardHeadOverfitsARepeatedTransition) {
  icm::IcmConfig cfg;
  cfg.beta = 1.0;
  const auto losses = forward_losses(cfg, 100, 9);
  int rises = 0;
  for (std::size_t t = 1; t < losses.size(); ++t) rises += losses[t] > losses[t - 1];
  EXPECT_LE(rises, 5);
  EXPECT_LT(losses.back(), 0.6 * losses.front());
}

// With the default mix the inverse loss first reshapes the features, which
// moves the forward target; once it settles the forward loss collapses.
TEST(IcmTraining, ForwardLossCollapsesUnderTheDefaultMix) {
  for (std::uint64_t seed : {9, 10, 11}) {
    const auto losses = forward_losses(icm::IcmConfig{}, 500, seed);
    EXPECT_LT(losses.back(), 0.05 * losses.front()) << "seed " << seed;
  }
}

// Repeated updates on one transition make it predictable, so its reward
// decays.
TEST(IcmTraining, RewardForARepeatedTransitionDecays) {
  Rng rng(10);
  const env::EnvConfig ecfg;
  const auto level = env::generate_level(1, env::Difficulty{});
  env::Session s = env::reset(level, 0, ecfg);
  const nn::Vector<float> obs = Eigen::Map<const nn::Vector<float>>(s.obs.values.data(), ecfg.observation_dim());
  env::step(level, s, env::Action::right, 4, ecfg);
  const nn::Vector<float> next = Eigen::Map<const nn::Vector<float>>(s.obs.values.data(), ecfg.observation_dim());
  icm::Icm<float> m(ecfg.observation_dim(), icm::IcmConfig{}, rng);
  const int a[1] = {static_cast<int>(env::Action::right)};
  std::vector<double> r;
  for (int t = 0; t < 500; ++t) {
    m.update(nn::Matrix<float>(obs), a, nn::Matrix<float>(next));
    r.push_back(m.intrinsic_reward(obs, a[0], next));
  }
  double first = 0.0, last = 0.0;
  for (int i = 0; i < 10; ++i) {
    first += r[i];
    last += r[490 + i];
  }
  EXPECT_LT(last, first);
}

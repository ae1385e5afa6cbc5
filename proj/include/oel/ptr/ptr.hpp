#pragma once

#include <algorithm>
#include <array>
#include <climits>
#include <cstdint>
#include <functional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "oel/dqn.hpp"
#include "oel/env/scroller.hpp"
#include "oel/errors.hpp"
#include "oel/explorer/explorer.hpp"
#include "oel/nn/network.hpp"
#include "oel/nn/optimizer.hpp"
#include "oel/per/prioritized_replay.hpp"
#include "oel/ptr/competence.hpp"
#include "oel/random.hpp"
#include "oel/transition.hpp"

namespace oel::ptr {

struct PtrConfig {
  double gamma = 0.95;
  std::size_t batch_size = 64;
  long target_sync_every = 500;  // in updates
  int train_every = 1;
  std::size_t learning_starts = 64;
  double learning_rate = 1e-4;
  std::vector<nn::Index> hidden{64, 64};
  int noisy_layers = 2;  // counted from the output side
  double sigma0 = 0.5;
  per::PerConfig per{};
  std::size_t per_capacity = 100000;
  int action_repeat = 4;
  int competence_window = 30;     // K
  int budget_episodes = 10000;    // J
  double competence_threshold = 0.9;
  int episode_cap = 4000;
  int test_episodes = 1;
  int test_passes_required = 1;
};

// Noisy Double DQN with prioritized replay, one per sub-goal.
class PtrAgent {
 public:
  PtrAgent(nn::Index observation_dim, PtrConfig config, std::uint64_t seed)
      : config_(std::move(config)),
        rng_(make_stream(seed, 21)),
        optimizer_(nn::AdamConfig{config_.learning_rate}),
        replay_(config_.per_capacity, config_.per) {
    Rng init = make_stream(seed, 22);
    nn::MlpSpec spec{observation_dim, config_.hidden, env::kNumActions, config_.noisy_layers,
                     nn::NoiseKind::factorized, config_.sigma0};
    online_ = nn::make_mlp<float>(spec, init);
    online_.resample_noise(rng_);
    target_ = online_;
    target_.resample_noise(rng_);
  }

  const PtrConfig& config() const { return config_; }
  nn::Network<float>& online() { return online_; }
  const nn::Network<float>& online() const { return online_; }
  const nn::Network<float>& target() const { return target_; }
  const per::PrioritizedReplay<Transition>& replay() const { return replay_; }
  long steps() const { return steps_; }
  long updates() const { return updates_; }

  static nn::Vector<float> as_vector(const env::StackedObservation& obs) {
    return Eigen::Map<const nn::Vector<float>>(obs.values.data(), static_cast<nn::Index>(obs.values.size()));
  }

  // Fresh noise per decision, then argmax of the noisy Q-values.
  env::Action act_training(const env::StackedObservation& obs) {
    online_.resample_noise(rng_);
    return static_cast<env::Action>(argmax_lowest(online_.predict(as_vector(obs))));
  }

  // Deterministic (mu) weights, greedy.
  env::Action act_greedy(const env::StackedObservation& obs) const { return greedy_action(online_, obs); }

  // Honours each layer's noise flag; stored policies have noise disabled.
  static env::Action greedy_action(const nn::Network<float>& net, const env::StackedObservation& obs) {
    return static_cast<env::Action>(argmax_lowest(net.predict(as_vector(obs))));
  }

  void set_noise_enabled(bool enabled) { online_.set_noise_enabled(enabled); }

  void observe(Transition t, double beta) {
    if (t.source != RewardSource::pseudo) throw UsageError("PTR received a transition not rewarded by the pseudo-reward");
    replay_.insert_max_priority(std::move(t));
    ++steps_;
    if (steps_ % config_.train_every != 0) return;
    if (replay_.size() < std::max(config_.learning_starts, config_.batch_size)) return;
    update(beta);
  }

  DqnUpdate update(double beta) {
    auto samples = replay_.sample(config_.batch_size, beta, rng_);
    std::vector<const Transition*> items;
    std::vector<float> weights;
    std::vector<std::uint64_t> ids;
    for (const auto& s : samples) {
      items.push_back(s.item);
      weights.push_back(static_cast<float>(s.is_weight));
      ids.push_back(s.id);
    }
    const Batch batch = make_batch(items);
    for (auto src : batch.sources)
      if (src != RewardSource::pseudo) throw UsageError("PTR batch contains a non-pseudo reward");
    online_.resample_noise(rng_);
    target_.resample_noise(rng_);
    auto out = double_dqn_step<float>(online_, target_, optimizer_, batch, config_.gamma, weights);
    replay_.update_priorities(ids, out.td_errors);
    ++updates_;
    if (updates_ % config_.target_sync_every == 0) target_.copy_params_from(online_);
    return out;
  }

 private:
  PtrConfig config_;
  Rng rng_;
  nn::Network<float> online_;
  nn::Network<float> target_;
  nn::Adam<float> optimizer_;
  per::PrioritizedReplay<Transition> replay_;
  long steps_ = 0;
  long updates_ = 0;
};

struct TestResult {
  bool passed = false;
  int steps = 0;  // agent decisions used
  int final_x = 0;
  bool looped = false;  // deterministic cycle detected before the cap
  env::Session end;     // session after the last decision
};

using GreedyPolicy = std::function<env::Action(const env::Session&)>;
using StepHook = std::function<void(env::Action, const env::StepInfo&)>;

// Runs a deterministic policy from `start` until x >= g_x, death, or the
// episode cap. Policy and dynamics are deterministic and the stacked
// observation is a function of the last four (x, y, rise, tick mod hazard
// period) states, so once that window repeats the run is in a cycle and the
// test ends early.
inline TestResult run_greedy_test(const GreedyPolicy& policy, const env::LevelSpec& level,
                                  const env::EnvConfig& env_config, const env::Session& start, int g_x,
                                  int action_repeat, const StepHook& on_step = {}) {
  TestResult out;
  env::Session session = start;
  env::begin_episode(session);
  out.final_x = session.state.agent_x;
  if (session.state.agent_x >= g_x) {
    out.passed = true;
    out.end = session;
    return out;
  }
  const long period = level.hazard_period();
  using Core = std::array<long, 4>;
  auto core = [&](const env::EnvState& s) -> Core { return {s.agent_x, s.agent_y, s.jump_timer, s.tick % period}; };
  std::array<Core, 4> history;
  history.fill(core(session.state));
  std::set<std::array<Core, 4>> seen;
  while (!session.state.done) {
    const env::Action a = policy(session);
    const env::StepInfo info = env::step(level, session, a, action_repeat, env_config, g_x);
    ++out.steps;
    out.final_x = info.x;
    if (on_step) on_step(a, info);
    if (pseudo_reward(info.x, g_x) > 0.0 && !info.death) {
      out.passed = true;
      break;
    }
    std::rotate(history.begin(), history.begin() + 1, history.end());
    history.back() = core(session.state);
    // The first frames of the stack predate `start`; wait until the window
    // holds only states observed here.
    if (out.steps >= 3 && !seen.insert(history).second) {
      out.looped = true;
      break;
    }
  }
  out.end = std::move(session);
  return out;
}

inline TestResult test_network(const nn::Network<float>& net, const env::LevelSpec& level,
                               const env::EnvConfig& env_config, const env::Session& start, int g_x,
                               int action_repeat, const StepHook& on_step = {}) {
  return run_greedy_test([&](const env::Session& s) { return PtrAgent::greedy_action(net, s.obs); }, level,
                         env_config, start, g_x, action_repeat, on_step);
}

// Test phase: deterministic mu weights and greedy actions from start.
inline TestResult test_policy(PtrAgent& agent, const env::LevelSpec& level, const env::EnvConfig& env_config,
                              const env::Session& start, int g_x) {
  agent.set_noise_enabled(false);
  TestResult r = test_network(agent.online(), level, env_config, start, g_x, agent.config().action_repeat);
  agent.set_noise_enabled(true);
  return r;
}

enum class TrainResult { achieved, failed };

struct TrainOutcome {
  TrainResult result = TrainResult::failed;
  int episodes_used = 0;
  std::vector<std::pair<int, double>> competence_curve;  // (episode, C)
  double final_competence = 0.0;
  int test_steps = 0;
  int tests_run = 0;
  long env_steps = 0;
};

// Environment config for PTR episodes: same world, PTR episode cap.
inline env::EnvConfig ptr_env_config(const env::EnvConfig& base, const PtrConfig& cfg) {
  env::EnvConfig out = base;
  out.episode_cap = cfg.episode_cap;
  return out;
}

// Trains until the competence gate (at least K episodes recorded and
// C >= threshold) holds and a deterministic test from `start` reaches g_x,
// or until the episode budget is spent.
inline TrainOutcome train_subgoal_policy(PtrAgent& agent, const env::LevelSpec& level,
                                         const env::EnvConfig& env_config, const env::Session& start,
                                         const explorer::SubGoal& goal,
                                         const std::function<void(int, double)>& on_episode = {}) {
  const auto& cfg = agent.config();
  if (start.state.agent_x >= goal.g_x) throw PreconditionError("train_subgoal_policy: start_x must be < g_x");
  if (cfg.budget_episodes < 1) throw PreconditionError("train_subgoal_policy: budget must be >= 1");
  const env::EnvConfig ecfg = ptr_env_config(env_config, cfg);
  CompetenceTracker tracker(cfg.competence_window);
  TrainOutcome out;
  for (int ep = 1; ep <= cfg.budget_episodes; ++ep) {
    const double beta = per::annealed_beta(cfg.per.beta0, ep - 1, cfg.budget_episodes);
    env::Session session = start;
    env::begin_episode(session);
    double outcome = 0.0;
    while (!session.state.done) {
      Transition t;
      t.obs = session.obs.values;
      const env::Action action = agent.act_training(session.obs);
      t.action = static_cast<int>(action);
      const env::StepInfo info = env::step(level, session, action, cfg.action_repeat, ecfg, goal.g_x);
      const double r = info.death ? 0.0 : pseudo_reward(info.x, goal.g_x);
      t.reward = static_cast<float>(r);
      t.next_obs = session.obs.values;
      t.terminal = r > 0.0 || info.death;
      t.source = RewardSource::pseudo;
      agent.observe(std::move(t), beta);
      ++out.env_steps;
      if (r > 0.0) {
        outcome = 1.0;
        break;
      }
    }
    tracker.record(outcome);
    const double c = tracker.competence();
    out.competence_curve.emplace_back(ep, c);
    out.episodes_used = ep;
    out.final_competence = c;
    if (on_episode) on_episode(ep, c);
    if (tracker.recorded() >= cfg.competence_window && c >= cfg.competence_threshold) {
      int passes = 0;
      TestResult last;
      for (int k = 0; k < cfg.test_episodes; ++k) {
        last = test_policy(agent, level, ecfg, start, goal.g_x);
        passes += last.passed ? 1 : 0;
      }
      ++out.tests_run;
      if (passes >= cfg.test_passes_required) {
        out.result = TrainResult::achieved;
        out.test_steps = last.steps;
        return out;
      }
    }
  }
  return out;
}

// A frozen sub-goal policy (noise disabled, so it acts on mu weights).
struct StoredPolicy {
  nn::Network<float> net;
  int start_x = 0;
  int goal_x = 0;
  int steps_to_goal = 0;
  int phase_id = 0;
  double competence = 0.0;
  int episodes_used = 0;
};

// Freezes the agent's network and re-verifies it from `start` before
// handing it out.
inline StoredPolicy store_policy(const PtrAgent& agent, const env::LevelSpec& level, const env::EnvConfig& env_config,
                                 const env::Session& start, const explorer::SubGoal& goal,
                                 const TrainOutcome& outcome) {
  if (outcome.result != TrainResult::achieved)
    throw UsageError("store_policy: only achieved sub-goals can be stored");
  if (outcome.final_competence < agent.config().competence_threshold)
    throw UsageError("store_policy: competence gate not met");
  StoredPolicy p;
  p.net = agent.online();
  p.net.set_noise_enabled(false);
  p.start_x = start.state.agent_x;
  p.goal_x = goal.g_x;
  p.phase_id = goal.phase_id;
  p.competence = outcome.final_competence;
  p.episodes_used = outcome.episodes_used;
  const auto check = test_network(p.net, level, ptr_env_config(env_config, agent.config()), start, goal.g_x,
                                  agent.config().action_repeat);
  if (!check.passed)
    throw ChainIntegrityError(0, "stored policy for g_x=" + std::to_string(goal.g_x) + " failed its replay check");
  p.steps_to_goal = check.steps;
  return p;
}

}  // namespace oel::ptr

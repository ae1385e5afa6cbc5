#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "oel/dqn.hpp"
#include "oel/env/scroller.hpp"
#include "oel/errors.hpp"
#include "oel/icm/icm.hpp"
#include "oel/nn/network.hpp"
#include "oel/nn/optimizer.hpp"
#include "oel/random.hpp"
#include "oel/transition.hpp"

namespace oel::explorer {

// Which x an exploration episode nominates as its sub-goal candidate.
enum class CandidateRule { max_x, final_x };

struct ExplorerConfig {
  double gamma = 0.99;
  double epsilon_start = 1.0;
  double epsilon_end = 0.05;
  long epsilon_decay_steps = 50000;
  std::size_t replay_capacity = 50000;
  std::size_t batch_size = 64;
  long target_sync_every = 1000;  // in updates
  int train_every = 4;            // decisions between updates
  std::size_t learning_starts = 1000;
  double learning_rate = 1e-4;
  std::vector<nn::Index> hidden{64, 64};
  int action_repeat = 6;
  CandidateRule candidate_rule = CandidateRule::max_x;
  // Sparse reward added on reaching the level goal. Zero for the proposed
  // system; the ICM+sparse baseline sets it.
  double final_goal_reward = 0.0;
};

enum class SubGoalStatus { candidate, in_training, achieved, discarded };

inline const char* to_string(SubGoalStatus s) {
  switch (s) {
    case SubGoalStatus::candidate: return "candidate";
    case SubGoalStatus::in_training: return "in_training";
    case SubGoalStatus::achieved: return "achieved";
    case SubGoalStatus::discarded: return "discarded";
  }
  return "?";
}

struct SubGoal {
  int g_x = 0;
  int discovered_in_episode = 0;
  int phase_id = 0;
  SubGoalStatus status = SubGoalStatus::candidate;

  // candidate -> in_training -> {achieved, discarded}; a candidate may also
  // be discarded without training.
  void advance(SubGoalStatus next) {
    const bool ok = (status == SubGoalStatus::candidate &&
                     (next == SubGoalStatus::in_training || next == SubGoalStatus::discarded)) ||
                    (status == SubGoalStatus::in_training &&
                     (next == SubGoalStatus::achieved || next == SubGoalStatus::discarded));
    if (!ok)
      throw UsageError(std::string("SubGoal: illegal transition ") + to_string(status) + " -> " +
                       to_string(next));
    status = next;
  }
};

struct EpisodeRecord {
  int phase_id = 0;
  int episode = 0;
  int final_x = 0;
  int max_x = 0;
  double intrinsic_return = 0.0;
  int steps = 0;
  bool death = false;
  bool reached_goal = false;
};

struct ExplorationResult {
  std::vector<SubGoal> candidates;  // g_x descending
  std::vector<EpisodeRecord> episodes;
  long env_steps = 0;
};

// Replaces the epsilon-greedy policy (tests inject scripted behaviour).
using ScriptedPolicy = std::function<env::Action(const env::Session&)>;

// Double DQN trained only on ICM reward, with its own ICM instance. Both
// persist across exploration phases of a run.
class ExplorerAgent {
 public:
  ExplorerAgent(nn::Index observation_dim, ExplorerConfig config, icm::IcmConfig icm_config, std::uint64_t seed)
      : config_(std::move(config)),
        init_rng_(make_stream(seed, 11)),
        rng_(make_stream(seed, 12)),
        icm_(observation_dim, std::move(icm_config), init_rng_),
        optimizer_(nn::AdamConfig{config_.learning_rate}),
        replay_(config_.replay_capacity) {
    online_ = nn::make_mlp<float>({observation_dim, config_.hidden, env::kNumActions}, init_rng_);
    target_ = online_;
  }

  const ExplorerConfig& config() const { return config_; }
  nn::Network<float>& online() { return online_; }
  const nn::Network<float>& online() const { return online_; }
  const nn::Network<float>& target() const { return target_; }
  icm::Icm<float>& icm() { return icm_; }
  const UniformReplay& replay() const { return replay_; }
  long steps() const { return steps_; }
  long updates() const { return updates_; }
  Rng& rng() { return rng_; }

  void set_scripted_policy(ScriptedPolicy policy) { scripted_ = std::move(policy); }

  // Linear decay from epsilon_start to epsilon_end over the run's first
  // epsilon_decay_steps decisions, then constant.
  double epsilon() const {
    if (config_.epsilon_decay_steps <= 0) return config_.epsilon_end;
    const double frac = std::min(1.0, static_cast<double>(steps_) / static_cast<double>(config_.epsilon_decay_steps));
    return config_.epsilon_start + frac * (config_.epsilon_end - config_.epsilon_start);
  }

  nn::Vector<float> q_values(const env::StackedObservation& obs) const {
    return online_.predict(nn::Vector<float>(
        Eigen::Map<const nn::Vector<float>>(obs.values.data(), static_cast<nn::Index>(obs.values.size()))));
  }

  // Uniform action with probability epsilon, otherwise argmax Q (lowest
  // index on ties).
  env::Action select_action(const env::StackedObservation& obs, double epsilon) {
    if (epsilon > 0.0 && uniform01(rng_) < epsilon)
      return static_cast<env::Action>(uniform_index(rng_, env::kNumActions));
    return static_cast<env::Action>(argmax_lowest(q_values(obs)));
  }

  env::Action act(const env::Session& session, double epsilon) {
    if (scripted_) return scripted_(session);
    return select_action(session.obs, epsilon);
  }

  DqnUpdate double_dqn_update(const Batch& batch) {
    for (auto src : batch.sources) {
      const bool allowed = src == RewardSource::intrinsic ||
                           (src == RewardSource::intrinsic_plus_final && config_.final_goal_reward > 0.0);
      if (!allowed) throw UsageError("explorer update received a transition with a foreign reward source");
    }
    auto out = double_dqn_step<float>(online_, target_, optimizer_, batch, config_.gamma);
    ++updates_;
    if (updates_ % config_.target_sync_every == 0) sync_target();
    return out;
  }

  void sync_target() { target_.copy_params_from(online_); }

  // Stores the transition and trains every train_every decisions once the
  // replay holds learning_starts transitions.
  void observe(Transition t) {
    replay_.push(std::move(t));
    ++steps_;
    if (steps_ % config_.train_every != 0) return;
    if (replay_.size() < std::max(config_.learning_starts, config_.batch_size)) return;
    const Batch batch = replay_.sample(config_.batch_size, rng_);
    double_dqn_update(batch);
    icm_.update(batch.obs, batch.actions, batch.next_obs);
  }

 private:
  ExplorerConfig config_;
  Rng init_rng_;
  Rng rng_;
  icm::Icm<float> icm_;
  nn::Network<float> online_;
  nn::Network<float> target_;
  nn::Adam<float> optimizer_;
  UniformReplay replay_;
  ScriptedPolicy scripted_;
  long steps_ = 0;
  long updates_ = 0;
};

struct PhaseOptions {
  double epsilon_floor = 0.0;  // raised when a phase is retried after a stall
  std::function<void(const EpisodeRecord&)> on_episode;
  // Called after every decision with (episode, action, step info).
  std::function<void(int, env::Action, const env::StepInfo&)> on_step;
};

// Dedup by g_x keeping the earliest discovery, drop g_x <= frontier, sort
// by g_x descending.
inline std::vector<SubGoal> collect_candidates(const std::vector<EpisodeRecord>& episodes, int frontier_x,
                                               CandidateRule rule) {
  std::vector<SubGoal> out;
  for (const auto& ep : episodes) {
    const int g = rule == CandidateRule::max_x ? ep.max_x : ep.final_x;
    if (g <= frontier_x) continue;
    const bool dup = std::any_of(out.begin(), out.end(), [&](const SubGoal& s) { return s.g_x == g; });
    if (!dup) out.push_back({g, ep.episode, ep.phase_id, SubGoalStatus::candidate});
  }
  std::stable_sort(out.begin(), out.end(), [](const SubGoal& a, const SubGoal& b) { return a.g_x > b.g_x; });
  return out;
}

// Runs n_episodes ICM-driven episodes, each starting from `start` (the
// session delivered at the frontier), training the agent online.
inline ExplorationResult run_exploration_phase(ExplorerAgent& agent, const env::LevelSpec& level,
                                               const env::EnvConfig& env_config, const env::Session& start,
                                               int frontier_x, int n_episodes, int phase_id,
                                               const PhaseOptions& options = {}) {
  if (n_episodes < 1) throw PreconditionError("run_exploration_phase: n_episodes must be >= 1");
  const auto& cfg = agent.config();
  const RewardSource source =
      cfg.final_goal_reward > 0.0 ? RewardSource::intrinsic_plus_final : RewardSource::intrinsic;
  ExplorationResult result;
  for (int e = 0; e < n_episodes; ++e) {
    env::Session session = start;
    env::begin_episode(session);
    EpisodeRecord rec;
    rec.phase_id = phase_id;
    rec.episode = e;
    rec.max_x = session.state.agent_x;
    rec.final_x = session.state.agent_x;
    while (!session.state.done) {
      const double eps = std::max(agent.epsilon(), options.epsilon_floor);
      const env::Action action = agent.act(session, eps);
      Transition t;
      t.obs = session.obs.values;
      t.action = static_cast<int>(action);
      const env::StepInfo info = env::step(level, session, action, cfg.action_repeat, env_config);
      t.next_obs = session.obs.values;
      const auto dim = static_cast<nn::Index>(t.obs.size());
      float reward = agent.icm().intrinsic_reward(Eigen::Map<const nn::Vector<float>>(t.obs.data(), dim),
                                                  t.action,
                                                  Eigen::Map<const nn::Vector<float>>(t.next_obs.data(), dim));
      rec.intrinsic_return += reward;
      if (info.reached_goal && cfg.final_goal_reward > 0.0) reward += static_cast<float>(cfg.final_goal_reward);
      t.reward = reward;
      t.terminal = info.death || info.reached_goal;
      t.source = source;
      agent.observe(std::move(t));
      rec.max_x = std::max(rec.max_x, info.x);
      rec.final_x = info.x;
      rec.death = info.death;
      rec.reached_goal = info.reached_goal;
      ++rec.steps;
      ++result.env_steps;
      if (options.on_step) options.on_step(e, action, info);
    }
    if (options.on_episode) options.on_episode(rec);
    result.episodes.push_back(rec);
  }
  result.candidates = collect_candidates(result.episodes, frontier_x, cfg.candidate_rule);
  return result;
}

}  // namespace oel::explorer

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "oel/env/generate.hpp"
#include "oel/env/scroller.hpp"
#include "oel/errors.hpp"
#include "oel/explorer/explorer.hpp"
#include "oel/orchestrator/experiment_config.hpp"
#include "oel/ptr/competence.hpp"
#include "oel/ptr/ptr.hpp"
#include "oel/random.hpp"

namespace oel {

struct SubGoalAttempt {
  int g_x = 0;
  bool achieved = false;
  int episodes_used = 0;
  double final_competence = 0.0;
  int tests_run = 0;
};

struct PhaseRecord {
  int phase_id = 0;
  int frontier_x = 0;
  int chain_steps = 0;
  int exploration_runs = 0;  // 1 + retries
  int exploration_episodes = 0;
  std::vector<int> candidates;  // g_x, furthest first
  std::vector<SubGoalAttempt> attempts;
  bool stalled = false;
};

struct PolicySummary {
  int start_x = 0;
  int goal_x = 0;
  int steps_to_goal = 0;
  int phase_id = 0;
  double competence = 0.0;
  int episodes_used = 0;
};

struct BaselineStats {
  long goal_reaches = 0;
  long first_reach_episode = -1;
  int tests_run = 0;
  bool policy_formed = false;
  int formed_at_episode = -1;
};

struct RunMetrics {
  Variant variant = Variant::n10;
  std::uint64_t seed = 0;
  std::uint64_t level_seed = 0;
  int goal_x = 0;
  int subgoals = 0;
  long episodes = 0;
  long exploration_episodes = 0;
  long ptr_episodes = 0;
  int chained_steps = 0;
  bool reached_final = false;
  int frontier_x = 0;
  long env_steps = 0;
  std::string termination;  // goal_reached | budget_exhausted | stalled | baseline_complete
  std::vector<PhaseRecord> phases;
  std::vector<PolicySummary> policies;
  BaselineStats baseline;
};

// Receives run events as they happen. Default implementations ignore them.
class RunObserver {
 public:
  virtual ~RunObserver() = default;
  virtual void on_exploration_episode(const explorer::EpisodeRecord&) {}
  virtual void on_phase(const PhaseRecord&) {}
  virtual void on_subgoal_trained(int /*subgoal_index*/, const explorer::SubGoal&, const ptr::TrainOutcome&) {}
  virtual void on_policy_stored(std::size_t /*index*/, const ptr::StoredPolicy&) {}
  virtual void on_baseline_progress(long /*episodes*/, const BaselineStats&) {}
};

struct RunState {
  std::vector<ptr::StoredPolicy> stored_policies;
  int frontier_x = 0;
  int phase_id = 0;
  long total_episodes = 0;
  long total_env_steps = 0;
  int subgoal_count = 0;
};

// Policies i and i+1 share a boundary, the first starts at 0, and the
// frontier is the last goal.
inline bool chain_is_contiguous(std::span<const ptr::StoredPolicy> policies, int frontier_x) {
  int expected = 0;
  for (const auto& p : policies) {
    if (p.start_x != expected || p.goal_x <= p.start_x) return false;
    expected = p.goal_x;
  }
  return frontier_x == expected;
}

struct ChainResult {
  env::Session session;
  int steps = 0;
  std::vector<int> link_steps;
};

// Executes every stored policy greedily in order from x = 0. `on_step`
// receives (link index, action, step info) for every decision.
inline ChainResult chain_to_frontier(
    std::span<const ptr::StoredPolicy> policies, const env::LevelSpec& level, const env::EnvConfig& env_config,
    const ptr::PtrConfig& ptr_config,
    const std::function<void(std::size_t, env::Action, const env::StepInfo&)>& on_step = {}) {
  ChainResult out;
  out.session = env::reset(level, 0, env_config);
  const env::EnvConfig link_cfg = ptr::ptr_env_config(env_config, ptr_config);
  for (std::size_t i = 0; i < policies.size(); ++i) {
    const auto& p = policies[i];
    if (out.session.state.agent_x != p.start_x)
      throw ChainIntegrityError(i, "chain link " + std::to_string(i) + " expected start x " +
                                       std::to_string(p.start_x) + ", found " +
                                       std::to_string(out.session.state.agent_x));
    ptr::StepHook hook;
    if (on_step) hook = [&](env::Action a, const env::StepInfo& info) { on_step(i, a, info); };
    auto r = ptr::test_network(p.net, level, link_cfg, out.session, p.goal_x, ptr_config.action_repeat, hook);
    if (!r.passed)
      throw ChainIntegrityError(i, "chain link " + std::to_string(i) + " failed to reach goal_x " +
                                       std::to_string(p.goal_x) + " (stopped at x=" + std::to_string(r.final_x) +
                                       ")");
    out.steps += r.steps;
    out.link_steps.push_back(r.steps);
    out.session = std::move(r.end);
  }
  return out;
}

namespace detail {

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline RunMetrics run_baseline(const ExperimentConfig& config, std::uint64_t seed, const env::LevelSpec& level,
                               RunObserver& observer) {
  RunMetrics m;
  m.variant = config.variant;
  m.seed = seed;
  m.level_seed = config.level_seed;
  m.goal_x = level.goal_x;
  explorer::ExplorerConfig ecfg = config.explorer;
  ecfg.final_goal_reward = config.baseline_final_reward;
  explorer::ExplorerAgent agent(config.env.observation_dim(), ecfg, config.icm, mix_seed(seed, 1));
  const env::Session start = env::reset(level, 0, config.env);
  ptr::CompetenceTracker tracker(config.ptr.competence_window);
  auto greedy_test = [&] {
    ++m.baseline.tests_run;
    auto policy = [&](const env::Session& s) { return agent.select_action(s.obs, 0.0); };
    return ptr::run_greedy_test(policy, level, config.env, start, level.goal_x, ecfg.action_repeat).passed;
  };
  explorer::PhaseOptions opts;
  long episode_index = 0;
  bool check_gate = false;
  opts.on_episode = [&](const explorer::EpisodeRecord& rec) {
    observer.on_exploration_episode(rec);
    ++episode_index;
    tracker.record(rec.reached_goal ? 1.0 : 0.0);
    if (rec.reached_goal) {
      ++m.baseline.goal_reaches;
      if (m.baseline.first_reach_episode < 0) m.baseline.first_reach_episode = episode_index;
    }
    if (tracker.recorded() >= config.ptr.competence_window &&
        tracker.competence() >= config.ptr.competence_threshold)
      check_gate = true;
  };
  int phase = 0;
  while (m.episodes < config.baseline_episode_budget && !m.baseline.policy_formed) {
    const long chunk = std::min<long>(config.baseline_log_every, config.baseline_episode_budget - m.episodes);
    for (long e = 0; e < chunk && !m.baseline.policy_formed; ++e) {
      auto r = explorer::run_exploration_phase(agent, level, config.env, start, 0, 1, phase, opts);
      ++m.episodes;
      m.env_steps += r.env_steps;
      if (check_gate) {
        check_gate = false;
        if (greedy_test()) {
          m.baseline.policy_formed = true;
          m.baseline.formed_at_episode = static_cast<int>(m.episodes);
        }
      }
    }
    ++phase;
    observer.on_baseline_progress(m.episodes, m.baseline);
  }
  if (!m.baseline.policy_formed && greedy_test()) {
    m.baseline.policy_formed = true;
    m.baseline.formed_at_episode = static_cast<int>(m.episodes);
  }
  m.exploration_episodes = m.episodes;
  m.reached_final = m.baseline.policy_formed;
  m.frontier_x = m.reached_final ? level.goal_x : 0;
  m.termination = "baseline_complete";
  return m;
}

}  // namespace detail

inline env::LevelSpec experiment_level(const ExperimentConfig& config) {
  const std::vector<int> repeats{config.ptr.action_repeat, config.explorer.action_repeat};
  return env::generate_level(config.level_seed, config.difficulty, repeats, config.env.jump_rise);
}

// The two-level loop: chain to the frontier, explore N episodes from there,
// train sub-goal policies furthest-first, extend the chain, repeat.
inline RunMetrics run_experiment(const ExperimentConfig& config, std::uint64_t seed, RunObserver& observer,
                                 RunState* state_out = nullptr) {
  config.validate();
  const env::LevelSpec level = experiment_level(config);
  if (config.variant == Variant::baseline_sparse) return detail::run_baseline(config, seed, level, observer);

  RunMetrics m;
  m.variant = config.variant;
  m.seed = seed;
  m.level_seed = config.level_seed;
  m.goal_x = level.goal_x;
  explorer::ExplorerAgent explorer(config.env.observation_dim(), config.explorer, config.icm, detail::mix_seed(seed, 1));
  RunState st;
  int consecutive_stalls = 0;
  explorer::PhaseOptions base_opts;
  base_opts.on_episode = [&](const explorer::EpisodeRecord& rec) { observer.on_exploration_episode(rec); };

  while (st.frontier_x < level.goal_x) {
    if (st.total_episodes >= config.global_episode_budget) {
      m.termination = "budget_exhausted";
      break;
    }
    PhaseRecord phase;
    phase.phase_id = st.phase_id;
    phase.frontier_x = st.frontier_x;
    const ChainResult chain = chain_to_frontier(st.stored_policies, level, config.env, config.ptr);
    phase.chain_steps = chain.steps;

    std::vector<explorer::SubGoal> candidates;
    for (int attempt = 0; attempt <= config.stall_retries; ++attempt) {
      explorer::PhaseOptions opts = base_opts;
      if (attempt > 0) opts.epsilon_floor = config.stall_epsilon;
      auto res = explorer::run_exploration_phase(explorer, level, config.env, chain.session, st.frontier_x,
                                                 config.n_exploration_episodes, st.phase_id, opts);
      ++phase.exploration_runs;
      phase.exploration_episodes += static_cast<int>(res.episodes.size());
      st.total_episodes += static_cast<long>(res.episodes.size());
      m.exploration_episodes += static_cast<long>(res.episodes.size());
      st.total_env_steps += res.env_steps;
      candidates = std::move(res.candidates);
      if (!candidates.empty()) break;
    }
    for (const auto& c : candidates) phase.candidates.push_back(c.g_x);

    if (candidates.empty()) {
      phase.stalled = true;
      observer.on_phase(phase);
      m.phases.push_back(std::move(phase));
      ++st.phase_id;
      if (++consecutive_stalls >= config.max_consecutive_stalls) {
        m.termination = "stalled";
        break;
      }
      continue;
    }
    consecutive_stalls = 0;

    while (auto pick = ptr::select_subgoal(candidates)) {
      auto& goal = candidates[*pick];
      goal.advance(explorer::SubGoalStatus::in_training);
      const int subgoal_index = st.subgoal_count++;
      ptr::PtrAgent agent(config.env.observation_dim(), config.ptr,
                          detail::mix_seed(seed, 1000 + static_cast<std::uint64_t>(subgoal_index)));
      const ptr::TrainOutcome outcome = ptr::train_subgoal_policy(agent, level, config.env, chain.session, goal);
      st.total_episodes += outcome.episodes_used;
      m.ptr_episodes += outcome.episodes_used;
      st.total_env_steps += outcome.env_steps;
      observer.on_subgoal_trained(subgoal_index, goal, outcome);
      phase.attempts.push_back({goal.g_x, outcome.result == ptr::TrainResult::achieved, outcome.episodes_used,
                                outcome.final_competence, outcome.tests_run});
      if (outcome.result == ptr::TrainResult::achieved) {
        goal.advance(explorer::SubGoalStatus::achieved);
        st.stored_policies.push_back(ptr::store_policy(agent, level, config.env, chain.session, goal, outcome));
        observer.on_policy_stored(st.stored_policies.size() - 1, st.stored_policies.back());
        if (goal.g_x <= st.frontier_x) throw UsageError("frontier must increase with every stored policy");
        st.frontier_x = goal.g_x;
        if (!chain_is_contiguous(st.stored_policies, st.frontier_x))
          throw ChainIntegrityError(st.stored_policies.size() - 1, "stored policies are no longer contiguous");
        break;
      }
      goal.advance(explorer::SubGoalStatus::discarded);
      if (st.total_episodes >= config.global_episode_budget) break;
    }
    observer.on_phase(phase);
    m.phases.push_back(std::move(phase));
    ++st.phase_id;
  }

  if (st.frontier_x >= level.goal_x) m.termination = "goal_reached";
  m.reached_final = st.frontier_x >= level.goal_x;
  m.frontier_x = st.frontier_x;
  m.subgoals = static_cast<int>(st.stored_policies.size());
  m.episodes = st.total_episodes;
  m.env_steps = st.total_env_steps;
  const ChainResult final_chain = chain_to_frontier(st.stored_policies, level, config.env, config.ptr);
  m.chained_steps = final_chain.steps;
  for (const auto& p : st.stored_policies)
    m.policies.push_back({p.start_x, p.goal_x, p.steps_to_goal, p.phase_id, p.competence, p.episodes_used});
  if (state_out) *state_out = std::move(st);
  return m;
}

inline RunMetrics run_experiment(const ExperimentConfig& config, std::uint64_t seed) {
  RunObserver none;
  return run_experiment(config, seed, none);
}

}  // namespace oel

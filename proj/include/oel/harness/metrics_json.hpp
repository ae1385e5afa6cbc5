#pragma once

#include <json.hpp>

#include "oel/orchestrator/orchestrator.hpp"

namespace oel::harness {

using json = nlohmann::ordered_json;

// Contains only quantities that are deterministic given config and seed;
// wall-clock timing is written elsewhere.
inline json metrics_to_json(const RunMetrics& m) {
  json j;
  j["variant"] = to_string(m.variant);
  j["seed"] = m.seed;
  j["level_seed"] = m.level_seed;
  j["goal_x"] = m.goal_x;
  j["reached_final"] = m.reached_final;
  j["termination"] = m.termination;
  j["frontier_x"] = m.frontier_x;
  j["subgoals"] = m.subgoals;
  j["chained_steps"] = m.chained_steps;
  j["episodes"] = m.episodes;
  j["exploration_episodes"] = m.exploration_episodes;
  j["ptr_episodes"] = m.ptr_episodes;
  j["env_steps"] = m.env_steps;
  json policies = json::array();
  for (const auto& p : m.policies)
    policies.push_back({{"start_x", p.start_x},
                        {"goal_x", p.goal_x},
                        {"steps_to_goal", p.steps_to_goal},
                        {"phase_id", p.phase_id},
                        {"competence", p.competence},
                        {"episodes_used", p.episodes_used}});
  j["policies"] = std::move(policies);
  j["phases"] = m.phases.size();
  if (m.variant == Variant::baseline_sparse) {
    j["baseline"] = {{"policy_formed", m.baseline.policy_formed},
                     {"formed_at_episode", m.baseline.formed_at_episode},
                     {"goal_reaches", m.baseline.goal_reaches},
                     {"first_reach_episode", m.baseline.first_reach_episode},
                     {"tests_run", m.baseline.tests_run}};
  }
  return j;
}

inline json phase_to_json(const PhaseRecord& p) {
  json attempts = json::array();
  for (const auto& a : p.attempts)
    attempts.push_back({{"g_x", a.g_x},
                        {"achieved", a.achieved},
                        {"episodes_used", a.episodes_used},
                        {"final_competence", a.final_competence},
                        {"tests_run", a.tests_run}});
  return {{"phase_id", p.phase_id},
          {"frontier_x", p.frontier_x},
          {"chain_steps", p.chain_steps},
          {"exploration_runs", p.exploration_runs},
          {"exploration_episodes", p.exploration_episodes},
          {"candidates", p.candidates},
          {"attempts", std::move(attempts)},
          {"stalled", p.stalled}};
}

inline json episode_to_json(const explorer::EpisodeRecord& r) {
  return {{"phase_id", r.phase_id},   {"episode", r.episode},     {"final_x", r.final_x},
          {"max_x", r.max_x},         {"intrinsic_return", r.intrinsic_return},
          {"steps", r.steps},         {"death", r.death},         {"reached_goal", r.reached_goal}};
}

}  // namespace oel::harness

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "oel/env/generate.hpp"
#include "oel/env/scroller.hpp"
#include "oel/errors.hpp"
#include "oel/explorer/explorer.hpp"
#include "oel/icm/icm.hpp"
#include "oel/ptr/ptr.hpp"

namespace oel {

enum class Variant { n10, n1, baseline_sparse };

inline std::string to_string(Variant v) {
  switch (v) {
    case Variant::n10: return "N10";
    case Variant::n1: return "N1";
    case Variant::baseline_sparse: return "baseline_sparse";
  }
  return "?";
}

inline Variant parse_variant(const std::string& s) {
  if (s == "N10" || s == "n10") return Variant::n10;
  if (s == "N1" || s == "n1") return Variant::n1;
  if (s == "baseline_sparse" || s == "baseline") return Variant::baseline_sparse;
  throw ConfigError("unknown variant '" + s + "' (expected N10, N1 or baseline_sparse)");
}

inline int default_exploration_episodes(Variant v) { return v == Variant::n1 ? 1 : 10; }

// Everything a run needs. Defaults reproduce the published setup where it
// is specified (N = 10, K = 30, J = 10000, threshold 0.9, 4000-decision
// exploration episodes, action repeat 6 / 4, 4 stacked frames).
struct ExperimentConfig {
  Variant variant = Variant::n10;
  int n_exploration_episodes = 10;
  std::vector<std::uint64_t> seeds{1};

  std::uint64_t level_seed = 1;
  env::Difficulty difficulty{};

  env::EnvConfig env{};
  explorer::ExplorerConfig explorer{};
  icm::IcmConfig icm{};
  ptr::PtrConfig ptr{};

  long global_episode_budget = 200000;
  int stall_retries = 5;
  double stall_epsilon = 1.0;       // epsilon floor while retrying a stalled phase
  int max_consecutive_stalls = 10;  // stalled phases in a row before giving up

  long baseline_episode_budget = 50000;
  double baseline_final_reward = 1.0;
  int baseline_log_every = 1000;  // episodes per baseline log record

  // Checks cross-field consistency; throws ConfigError.
  void validate() const {
    if (n_exploration_episodes < 1) throw ConfigError("run.exploration_episodes must be >= 1");
    if (variant == Variant::n1 && n_exploration_episodes != 1)
      throw ConfigError("variant N1 requires run.exploration_episodes = 1");
    if (seeds.empty()) throw ConfigError("run.seeds must list at least one seed");
    if (env.frame_stack < 1 || env.episode_cap < 1) throw ConfigError("env.frame_stack and env.episode_cap must be >= 1");
    if (explorer.action_repeat < 1 || ptr.action_repeat < 1) throw ConfigError("action repeats must be >= 1");
    if (ptr.competence_window < 1) throw ConfigError("ptr.competence_window must be >= 1");
    if (ptr.budget_episodes < 1) throw ConfigError("ptr.budget_episodes must be >= 1");
    if (ptr.competence_threshold < 0.0 || ptr.competence_threshold > 1.0)
      throw ConfigError("ptr.competence_threshold must be in [0, 1]");
    if (explorer.batch_size < 1 || ptr.batch_size < 1) throw ConfigError("batch sizes must be >= 1");
    if (explorer.train_every < 1 || ptr.train_every < 1) throw ConfigError("train_every must be >= 1");
    if (global_episode_budget < 1 || baseline_episode_budget < 1) throw ConfigError("budgets must be >= 1");
    if (stall_retries < 0 || max_consecutive_stalls < 1) throw ConfigError("invalid stall settings");
    if (icm.beta < 0.0 || icm.beta > 1.0) throw ConfigError("icm.beta must be in [0, 1]");
    if (!(icm.eta > 0.0)) throw ConfigError("icm.eta must be > 0");
  }
};

}  // namespace oel

#pragma once

#include <algorithm>
#include <climits>
#include <cstdint>
#include <deque>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "oel/env/level.hpp"
#include "oel/env/scroller.hpp"
#include "oel/errors.hpp"
#include "oel/random.hpp"

namespace oel::env {

// Procedural level parameters. Features (pits, walls, patrolling hazards)
// are separated by flat runs drawn from [min_gap, max_gap].
struct Difficulty {
  std::string name = "default";
  int length_x = 300;
  int height = 8;
  int start_run = 10;
  int end_run = 8;
  int min_gap = 4;
  int max_gap = 12;
  int max_pit_width = 3;
  int max_wall_height = 3;
  int max_wall_width = 2;
  int min_hazard_range = 2;
  int max_hazard_range = 4;
  int max_hazard_period = 2;
  double pit_weight = 0.4;
  double wall_weight = 0.35;
  double hazard_weight = 0.25;
  int max_retries = 64;

  bool has_features() const { return pit_weight + wall_weight + hazard_weight > 0.0; }

  static Difficulty trivial() {
    Difficulty d;
    d.name = "trivial";
    d.pit_weight = d.wall_weight = d.hazard_weight = 0.0;
    return d;
  }

  static Difficulty named(const std::string& name) {
    if (name == "trivial") return trivial();
    if (name == "default") return Difficulty{};
    throw ConfigError("unknown difficulty '" + name + "' (expected trivial or default)");
  }
};

struct SolveResult {
  bool solvable = false;
  std::vector<Action> plan;  // shortest decision sequence, empty if unsolvable
};

// Breadth-first search over decisions of `repeat` ticks each, from `start`
// until x >= target_x. States are (x, y, rise timer, tick mod hazard period);
// the dynamics are deterministic so this is exact.
inline SolveResult solve_bfs(const LevelSpec& level, const EnvState& start, int repeat, int jump_rise,
                             int target_x = INT_MAX) {
  if (target_x == INT_MAX) target_x = level.goal_x;
  const int period = level.hazard_period();
  const int rises = jump_rise + 1;
  auto key = [&](const EnvState& s) -> std::size_t {
    return ((static_cast<std::size_t>(s.agent_x) * level.height + s.agent_y) * rises + s.jump_timer) * period +
           static_cast<std::size_t>(s.tick % period);
  };
  const std::size_t n_keys = static_cast<std::size_t>(level.length_x) * level.height * rises * period;
  struct Node {
    EnvState state;
    std::int64_t parent;
    Action action;
  };
  std::vector<Node> nodes;
  std::vector<char> seen(n_keys, 0);
  std::deque<std::int64_t> frontier;
  if (!start.alive) return {};
  if (start.agent_x >= target_x) return {true, {}};
  nodes.push_back({start, -1, Action::noop});
  seen[key(start)] = 1;
  frontier.push_back(0);
  while (!frontier.empty()) {
    const auto idx = frontier.front();
    frontier.pop_front();
    for (int a = 0; a < kNumActions; ++a) {
      EnvState s = nodes[idx].state;
      const auto action = static_cast<Action>(a);
      bool hit = false;
      for (int r = 0; r < repeat; ++r) {
        physics::tick(level, s, action_dx(action), action_jumps(action), jump_rise);
        if (!s.alive) break;
        if (s.agent_x >= target_x || s.reached_goal) {
          hit = s.agent_x >= target_x;
          break;
        }
      }
      if (!s.alive) continue;
      if (hit) {
        SolveResult out{true, {action}};
        for (auto p = idx; nodes[p].parent >= 0; p = nodes[p].parent) out.plan.push_back(nodes[p].action);
        std::reverse(out.plan.begin(), out.plan.end());
        return out;
      }
      if (s.reached_goal) continue;
      const auto k = key(s);
      if (seen[k]) continue;
      seen[k] = 1;
      nodes.push_back({s, idx, action});
      frontier.push_back(static_cast<std::int64_t>(nodes.size()) - 1);
    }
  }
  return {};
}

inline bool level_solvable(const LevelSpec& level, int repeat, int jump_rise = 3) {
  EnvState start;
  return solve_bfs(level, start, repeat, jump_rise).solvable;
}

namespace detail {

inline LevelSpec draw_level(const Difficulty& d, std::uint64_t seed, Rng& rng) {
  LevelSpec level = make_flat_level(d.length_x, d.height, seed);
  if (!d.has_features()) return level;
  auto uniform = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  std::discrete_distribution<int> pick({d.pit_weight, d.wall_weight, d.hazard_weight});
  int x = d.start_run;
  const int last = d.length_x - d.end_run;
  while (true) {
    x += uniform(d.min_gap, d.max_gap);
    const int kind = pick(rng);
    if (kind == 0) {
      const int w = uniform(1, d.max_pit_width);
      if (x + w >= last) break;
      for (int i = 0; i < w; ++i) level.set(x + i, 0, Tile::pit);
      x += w;
    } else if (kind == 1) {
      const int h = uniform(1, d.max_wall_height);
      const int w = uniform(1, d.max_wall_width);
      if (x + w >= last) break;
      for (int i = 0; i < w; ++i)
        for (int y = 1; y <= h; ++y) level.set(x + i, y, Tile::wall);
      x += w;
    } else {
      const int range = uniform(d.min_hazard_range, d.max_hazard_range);
      const int period = uniform(1, d.max_hazard_period);
      if (x + range + 1 >= last) break;
      level.hazards.push_back({x, range, period, uniform(0, 2 * range - 1)});
      x += range + 1;
    }
  }
  return level;
}

}  // namespace detail

// Deterministic in `seed`. Every returned level is verified solvable from
// x = 0 by breadth-first search at each of `repeats` (action-repeat values).
inline LevelSpec generate_level(std::uint64_t seed, const Difficulty& difficulty,
                                const std::vector<int>& repeats = {4, 6}, int jump_rise = 3) {
  if (difficulty.length_x < difficulty.start_run + difficulty.end_run + 2)
    throw ConfigError("difficulty: level too short for its start and end runs");
  Rng rng = make_stream(seed, 0x1e7e1);
  for (int attempt = 0; attempt < difficulty.max_retries; ++attempt) {
    LevelSpec level = detail::draw_level(difficulty, seed, rng);
    const bool ok = std::all_of(repeats.begin(), repeats.end(),
                                [&](int r) { return level_solvable(level, r, jump_rise); });
    if (ok) return level;
  }
  throw GenerationError("no solvable level for seed " + std::to_string(seed) + " within " +
                        std::to_string(difficulty.max_retries) + " attempts");
}

}  // namespace oel::env

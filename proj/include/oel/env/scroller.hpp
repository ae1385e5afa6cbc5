#pragma once

#include <algorithm>
#include <array>
#include <climits>
#include <string>
#include <string_view>
#include <vector>

#include "oel/env/level.hpp"
#include "oel/errors.hpp"

namespace oel::env {

enum class Action : std::uint8_t { noop = 0, right = 1, left = 2, jump = 3, jump_right = 4, jump_left = 5 };
inline constexpr int kNumActions = 6;

inline constexpr std::array<std::string_view, kNumActions> kActionNames = {
    "noop", "right", "left", "jump", "jump_right", "jump_left"};

inline int action_dx(Action a) {
  switch (a) {
    case Action::right:
    case Action::jump_right: return 1;
    case Action::left:
    case Action::jump_left: return -1;
    default: return 0;
  }
}

inline bool action_jumps(Action a) {
  return a == Action::jump || a == Action::jump_right || a == Action::jump_left;
}

struct EnvConfig {
  int episode_cap = 4000;  // agent decisions per episode
  int jump_rise = 3;       // ticks of upward motion per jump
  int frame_stack = 4;
  // Observation window around the agent, in tiles.
  int window_behind = 2;
  int window_ahead = 5;
  int rows_below = 3;
  int rows_above = 2;

  int window_width() const { return window_behind + window_ahead + 1; }
  int window_height() const { return rows_below + rows_above + 1; }
  int frame_dim() const { return window_width() * window_height() + 2; }
  int observation_dim() const { return frame_dim() * frame_stack; }
};

struct EnvState {
  int agent_x = 0;
  int agent_y = 1;
  int jump_timer = 0;  // remaining rise ticks
  long tick = 0;       // global simulator tick, drives hazards
  int step_count = 0;  // decisions in the current episode
  bool alive = true;
  bool done = false;
  bool reached_goal = false;

  // +1 rising, -1 airborne and not rising, 0 standing.
  int vertical_velocity(const LevelSpec& level) const {
    if (jump_timer > 0) return 1;
    return level.solid(agent_x, agent_y - 1) ? 0 : -1;
  }

  bool operator==(const EnvState&) const = default;
};

inline std::vector<int> hazard_phases(const LevelSpec& level, const EnvState& state) {
  std::vector<int> phases;
  phases.reserve(level.hazards.size());
  for (const auto& h : level.hazards) phases.push_back(static_cast<int>(state.tick % h.cycle()));
  return phases;
}

// The most recent `frame_stack` frames, oldest first, flattened.
struct StackedObservation {
  int frame_dim = 0;
  int frames = 0;
  std::vector<float> values;

  void fill(const std::vector<float>& frame, int n_frames) {
    frame_dim = static_cast<int>(frame.size());
    frames = n_frames;
    values.clear();
    for (int i = 0; i < n_frames; ++i) values.insert(values.end(), frame.begin(), frame.end());
  }

  void push(const std::vector<float>& frame) {
    std::copy(values.begin() + frame_dim, values.end(), values.begin());
    std::copy(frame.begin(), frame.end(), values.end() - frame_dim);
  }

  bool operator==(const StackedObservation&) const = default;
};

struct Session {
  EnvState state;
  StackedObservation obs;

  bool operator==(const Session&) const = default;
};

struct StepInfo {
  int x = 0;
  bool done = false;
  bool death = false;
  bool reached_goal = false;
  bool reached_stop = false;  // x >= stop_x was hit inside this decision
  int ticks = 0;
};

namespace physics {

inline bool hazard_hit(const LevelSpec& level, int x_before, int x_after, int y, long tick_after) {
  if (y != 1) return false;
  for (const auto& h : level.hazards) {
    const int now = h.position(tick_after);
    if (now == x_after) return true;
    const int before = h.position(tick_after - 1);
    if (before == x_after && now == x_before) return true;
  }
  return false;
}

// Advances one simulator tick. Horizontal motion resolves before vertical
// motion; death is checked after both.
inline void tick(const LevelSpec& level, EnvState& s, int dx, bool jump, int jump_rise) {
  const bool grounded = level.solid(s.agent_x, s.agent_y - 1);
  if (jump && grounded && s.jump_timer == 0) s.jump_timer = jump_rise;
  const int x_before = s.agent_x;
  const int nx = std::clamp(s.agent_x + dx, 0, level.goal_x);
  if (nx != s.agent_x && !level.solid(nx, s.agent_y)) s.agent_x = nx;
  if (s.jump_timer > 0) {
    if (!level.solid(s.agent_x, s.agent_y + 1)) {
      ++s.agent_y;
      --s.jump_timer;
    } else {
      s.jump_timer = 0;
    }
  } else if (!level.solid(s.agent_x, s.agent_y - 1)) {
    --s.agent_y;
  }
  ++s.tick;
  if (s.agent_y <= 0 || hazard_hit(level, x_before, s.agent_x, s.agent_y, s.tick)) s.alive = false;
  if (s.alive && s.agent_x >= level.goal_x) s.reached_goal = true;
}

// True when every sequence of horizontal inputs ends in death before the
// agent next stands on solid ground. Jumping is only possible from the
// ground, so airborne states branch on dx alone.
inline bool doomed(const LevelSpec& level, const EnvState& s, int jump_rise, int depth = -1) {
  if (!s.alive) return true;
  if (s.jump_timer == 0 && level.solid(s.agent_x, s.agent_y - 1)) return false;
  if (depth < 0) depth = level.height + jump_rise + 1;
  if (depth == 0) return false;
  for (int dx : {1, 0, -1}) {
    EnvState next = s;
    tick(level, next, dx, false, jump_rise);
    if (!doomed(level, next, jump_rise, depth - 1)) return false;
  }
  return true;
}

}  // namespace physics

// Tile codes: solid 1, hazard -1, anything else 0. Followed by vertical
// velocity and x normalized by goal_x.
inline std::vector<float> make_frame(const LevelSpec& level, const EnvState& s, const EnvConfig& cfg) {
  std::vector<float> frame;
  frame.reserve(static_cast<std::size_t>(cfg.frame_dim()));
  for (int dy = cfg.rows_above; dy >= -cfg.rows_below; --dy) {
    for (int dx = -cfg.window_behind; dx <= cfg.window_ahead; ++dx) {
      const int x = s.agent_x + dx;
      const int y = s.agent_y + dy;
      float code = level.solid(x, y) ? 1.0f : 0.0f;
      if (y == 1) {
        for (const auto& h : level.hazards)
          if (h.position(s.tick) == x) code = -1.0f;
      }
      frame.push_back(code);
    }
  }
  frame.push_back(static_cast<float>(s.vertical_velocity(level)));
  frame.push_back(static_cast<float>(s.agent_x) / static_cast<float>(level.goal_x));
  return frame;
}

inline bool safe_start(const LevelSpec& level, int x) {
  if (x < 0 || x >= level.goal_x) return false;
  if (!level.solid(x, 0) || level.solid(x, 1)) return false;
  for (const auto& h : level.hazards)
    if (x >= h.x && x <= h.x + h.range) return false;
  return true;
}

// Places the agent on the ground at start_x with tick 0 and a stack filled
// with the initial frame.
inline Session reset(const LevelSpec& level, int start_x, const EnvConfig& cfg) {
  if (!safe_start(level, start_x))
    throw PreconditionError("reset: start_x " + std::to_string(start_x) + " is not a safe ground tile");
  Session session;
  session.state.agent_x = start_x;
  session.state.agent_y = 1;
  session.obs.fill(make_frame(level, session.state, cfg), cfg.frame_stack);
  return session;
}

// Starts a new episode from wherever the session currently is (used when a
// chain of policies has delivered the agent to the frontier).
inline void begin_episode(Session& session) {
  if (!session.state.alive) throw UsageError("begin_episode: agent is dead");
  session.state.step_count = 0;
  session.state.done = session.state.reached_goal;
}

// Repeats `action` for `repeat` ticks, stopping early on death, on reaching
// the level goal, or once x >= stop_x. Stopping mid-fall into a pit or
// hazard counts as the death that would follow. Appends one frame per call.
inline StepInfo step(const LevelSpec& level, Session& session, Action action, int repeat,
                     const EnvConfig& cfg, int stop_x = INT_MAX) {
  auto& s = session.state;
  if (s.done || !s.alive) throw UsageError("step called on a finished episode");
  if (s.step_count >= cfg.episode_cap) throw UsageError("step called past the episode cap");
  if (repeat < 1) throw PreconditionError("step: repeat must be >= 1");
  StepInfo info;
  const int dx = action_dx(action);
  const bool jump = action_jumps(action);
  for (int r = 0; r < repeat; ++r) {
    physics::tick(level, s, dx, jump, cfg.jump_rise);
    ++info.ticks;
    if (!s.alive || s.reached_goal) break;
    if (s.agent_x >= stop_x) {
      if (physics::doomed(level, s, cfg.jump_rise)) {
        s.alive = false;
        break;
      }
      info.reached_stop = true;
      break;
    }
  }
  ++s.step_count;
  session.obs.push(make_frame(level, s, cfg));
  info.x = s.agent_x;
  info.death = !s.alive;
  info.reached_goal = s.reached_goal;
  if (s.reached_goal && s.agent_x >= stop_x) info.reached_stop = true;
  s.done = info.death || s.reached_goal || s.step_count >= cfg.episode_cap;
  info.done = s.done;
  return info;
}

}  // namespace oel::env

#pragma once

#include <optional>
#include <span>
#include <vector>

#include "oel/errors.hpp"
#include "oel/explorer/explorer.hpp"

namespace oel::ptr {

// Binary sparse pseudo-reward for sub-goal g_x: 1 once x_t >= g_x.
inline double pseudo_reward(int x_t, int g_x) { return x_t >= g_x ? 1.0 : 0.0; }

// Moving average of the last K episode outcomes. Before K outcomes exist
// the mean runs over what has been recorded.
class CompetenceTracker {
 public:
  explicit CompetenceTracker(int window = 30) : window_(window) {
    if (window < 1) throw ConfigError("CompetenceTracker window must be >= 1");
    ring_.assign(static_cast<std::size_t>(window), 0.0);
  }

  void record(double outcome) {
    if (outcome < 0.0 || outcome > 1.0) throw PreconditionError("competence outcome must lie in [0, 1]");
    ring_[next_] = outcome;
    next_ = (next_ + 1) % ring_.size();
    ++recorded_;
  }

  double competence() const {
    if (recorded_ == 0) throw UsageError("competence requested before any episode was recorded");
    const std::size_t n = std::min<std::size_t>(recorded_, ring_.size());
    double sum = 0.0;
    // Oldest to newest.
    for (std::size_t i = 0; i < n; ++i) sum += ring_[(next_ + ring_.size() - n + i) % ring_.size()];
    return sum / static_cast<double>(n);
  }

  int window() const { return window_; }
  long recorded() const { return static_cast<long>(recorded_); }
  bool window_full() const { return recorded_ >= ring_.size(); }

 private:
  int window_;
  std::vector<double> ring_;
  std::size_t next_ = 0;
  std::size_t recorded_ = 0;
};

// Index of the furthest candidate still in `candidate` status; ties go to
// the earliest discovery. Empty when every candidate has been used up.
inline std::optional<std::size_t> select_subgoal(std::span<const explorer::SubGoal> candidates) {
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto& c = candidates[i];
    if (c.status != explorer::SubGoalStatus::candidate) continue;
    if (!best) {
      best = i;
      continue;
    }
    const auto& b = candidates[*best];
    if (c.g_x > b.g_x || (c.g_x == b.g_x && (c.phase_id < b.phase_id ||
                                              (c.phase_id == b.phase_id &&
                                               c.discovered_in_episode < b.discovered_in_episode))))
      best = i;
  }
  return best;
}

}  // namespace oel::ptr

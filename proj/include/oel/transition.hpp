#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "oel/errors.hpp"
#include "oel/nn/param_tensor.hpp"
#include "oel/random.hpp"

namespace oel {

// Where a transition's reward came from. Learners assert on this so that no
// environment reward leaks into a component that must not see it.
enum class RewardSource : std::uint8_t {
  intrinsic = 0,             // ICM prediction error only
  intrinsic_plus_final = 1,  // ICM plus the sparse final-goal reward (baseline)
  pseudo = 2,                // binary sub-goal pseudo-reward
};

struct Transition {
  std::vector<float> obs;
  int action = 0;
  float reward = 0.0f;
  std::vector<float> next_obs;
  bool terminal = false;
  RewardSource source = RewardSource::intrinsic;
};

// Column-per-sample view of a set of transitions.
struct Batch {
  nn::Matrix<float> obs;
  nn::Matrix<float> next_obs;
  std::vector<int> actions;
  std::vector<float> rewards;
  std::vector<char> terminals;
  std::vector<RewardSource> sources;

  std::size_t size() const { return actions.size(); }
};

inline Batch make_batch(std::span<const Transition* const> items) {
  if (items.empty()) throw PreconditionError("make_batch: empty batch");
  const auto dim = static_cast<nn::Index>(items.front()->obs.size());
  const auto n = static_cast<nn::Index>(items.size());
  Batch b;
  b.obs.resize(dim, n);
  b.next_obs.resize(dim, n);
  for (nn::Index i = 0; i < n; ++i) {
    const Transition& t = *items[i];
    if (static_cast<nn::Index>(t.obs.size()) != dim || static_cast<nn::Index>(t.next_obs.size()) != dim)
      throw ConfigError("make_batch: observation length mismatch");
    b.obs.col(i) = Eigen::Map<const nn::Vector<float>>(t.obs.data(), dim);
    b.next_obs.col(i) = Eigen::Map<const nn::Vector<float>>(t.next_obs.data(), dim);
    b.actions.push_back(t.action);
    b.rewards.push_back(t.reward);
    b.terminals.push_back(t.terminal ? 1 : 0);
    b.sources.push_back(t.source);
  }
  return b;
}

// Fixed-capacity FIFO replay with uniform sampling (with replacement).
class UniformReplay {
 public:
  explicit UniformReplay(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw ConfigError("UniformReplay capacity must be positive");
  }

  void push(Transition t) {
    if (items_.size() < capacity_) {
      items_.push_back(std::move(t));
    } else {
      items_[next_] = std::move(t);
    }
    next_ = (next_ + 1) % capacity_;
  }

  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  const Transition& operator[](std::size_t i) const { return items_[i]; }

  Batch sample(std::size_t k, Rng& rng) const {
    if (items_.empty()) throw UsageError("UniformReplay::sample on an empty buffer");
    std::vector<const Transition*> picked(k);
    for (auto& p : picked) p = &items_[uniform_index(rng, items_.size())];
    return make_batch(picked);
  }

 private:
  std::size_t capacity_;
  std::size_t next_ = 0;
  std::vector<Transition> items_;
};

}  // namespace oel

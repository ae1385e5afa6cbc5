#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "oel/errors.hpp"
#include "oel/per/sum_tree.hpp"
#include "oel/random.hpp"

namespace oel::per {

struct PerConfig {
  double alpha = 0.6;
  double beta0 = 0.4;
  double epsilon = 1e-3;  // priority floor
};

struct PerStats {
  std::uint64_t inserted = 0;
  std::uint64_t sampled = 0;
  std::uint64_t updates = 0;
  std::uint64_t stale_updates = 0;
};

// A sampled item. `id` is the insertion serial; it goes stale once the ring
// overwrites its slot.
template <typename T>
struct Sample {
  std::uint64_t id = 0;
  const T* item = nullptr;
  double probability = 0.0;
  double is_weight = 1.0;
};

// Proportional prioritized replay: leaf i holds (p_i + epsilon)^alpha and is
// drawn with probability leaf_i / total.
template <typename T>
class PrioritizedReplay {
 public:
  PrioritizedReplay(std::size_t capacity, PerConfig config)
      : capacity_(capacity), config_(config), tree_(capacity) {
    if (capacity == 0) throw ConfigError("PrioritizedReplay capacity must be positive");
    if (config.alpha < 0.0 || config.beta0 <= 0.0 || config.beta0 > 1.0 || config.epsilon <= 0.0)
      throw ConfigError("PrioritizedReplay: invalid alpha/beta0/epsilon");
    serials_.assign(capacity_, 0);
  }

  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  bool empty() const { return items_.empty(); }
  const PerConfig& config() const { return config_; }
  const SumTree& tree() const { return tree_; }
  const PerStats& stats() const { return stats_; }
  double max_priority() const { return max_priority_; }

  double leaf_value(double priority) const { return std::pow(priority + config_.epsilon, config_.alpha); }

  std::uint64_t insert(T item, double priority) {
    if (!(priority >= 0.0) || !std::isfinite(priority))
      throw PreconditionError("PrioritizedReplay::insert: priority must be finite and >= 0");
    const std::uint64_t id = next_id_++;
    const std::size_t slot = static_cast<std::size_t>(id % capacity_);
    if (items_.size() < capacity_)
      items_.push_back(std::move(item));
    else
      items_[slot] = std::move(item);
    serials_[slot] = id;
    tree_.set(slot, leaf_value(priority));
    max_priority_ = std::max(max_priority_, priority);
    ++stats_.inserted;
    return id;
  }

  // New items enter at the largest priority seen so far.
  std::uint64_t insert_max_priority(T item) { return insert(std::move(item), max_priority_); }

  // Stratified draw: k equal-mass segments, one uniform draw in each.
  // Importance weights (N * P(i))^-beta are normalized by the batch maximum.
  std::vector<Sample<T>> sample(std::size_t k, double beta, Rng& rng) {
    if (items_.empty()) throw UsageError("PrioritizedReplay::sample on an empty buffer");
    if (k == 0 || k > items_.size())
      throw PreconditionError("PrioritizedReplay::sample: k must be in [1, size]");
    const double total = tree_.total();
    if (!(total > 0.0)) throw UsageError("PrioritizedReplay::sample: total priority is zero");
    const double segment = total / static_cast<double>(k);
    const double n = static_cast<double>(items_.size());
    std::vector<Sample<T>> out(k);
    double max_w = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      const double lo = segment * static_cast<double>(i);
      const double mass = std::min(lo + segment * uniform01(rng), std::nextafter(total, 0.0));
      std::size_t slot = tree_.find(mass);
      if (slot >= items_.size()) slot = items_.size() - 1;
      const double p = tree_.leaf(slot) / total;
      out[i].id = serials_[slot];
      out[i].item = &items_[slot];
      out[i].probability = p;
      out[i].is_weight = std::pow(n * p, -beta);
      max_w = std::max(max_w, out[i].is_weight);
    }
    for (auto& s : out) s.is_weight /= max_w;
    stats_.sampled += k;
    return out;
  }

  // Stale ids (slot since overwritten) are skipped and counted.
  void update_priorities(std::span<const std::uint64_t> ids, std::span<const double> priorities) {
    if (ids.size() != priorities.size())
      throw PreconditionError("update_priorities: ids and priorities differ in length");
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (ids[i] >= next_id_) throw PreconditionError("update_priorities: id was never issued");
      const std::size_t slot = static_cast<std::size_t>(ids[i] % capacity_);
      if (serials_[slot] != ids[i]) {
        ++stats_.stale_updates;
        continue;
      }
      const double p = priorities[i];
      if (!(p >= 0.0) || !std::isfinite(p))
        throw PreconditionError("update_priorities: priority must be finite and >= 0");
      tree_.set(slot, leaf_value(p));
      max_priority_ = std::max(max_priority_, p);
      ++stats_.updates;
    }
  }

  void clear() {
    items_.clear();
    tree_.clear();
    std::fill(serials_.begin(), serials_.end(), 0);
    next_id_ = 0;
    max_priority_ = 1.0;
  }

 private:
  std::size_t capacity_;
  PerConfig config_;
  SumTree tree_;
  std::vector<T> items_;
  std::vector<std::uint64_t> serials_;
  std::uint64_t next_id_ = 0;
  double max_priority_ = 1.0;
  PerStats stats_;
};

// beta annealed linearly from beta0 to 1 over `horizon` units of progress.
inline double annealed_beta(double beta0, double progress, double horizon) {
  if (horizon <= 0.0) return 1.0;
  return std::min(1.0, beta0 + (1.0 - beta0) * std::clamp(progress / horizon, 0.0, 1.0));
}

}  // namespace oel::per

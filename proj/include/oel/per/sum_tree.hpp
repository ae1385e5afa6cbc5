#pragma once

#include <bit>
#include <cmath>
#include <cstddef>
#include <vector>

#include "oel/errors.hpp"

namespace oel::per {

// Binary sum tree over a power-of-two number of leaves. nodes_[1] is the
// root, the children of node i are 2i and 2i+1, and leaves occupy
// [capacity, 2 * capacity).
class SumTree {
 public:
  explicit SumTree(std::size_t min_leaves) {
    if (min_leaves == 0) throw ConfigError("SumTree needs at least one leaf");
    capacity_ = std::bit_ceil(min_leaves);
    nodes_.assign(2 * capacity_, 0.0);
  }

  std::size_t capacity() const { return capacity_; }
  double total() const { return nodes_[1]; }
  double leaf(std::size_t i) const { return nodes_[capacity_ + i]; }

  // Writes a leaf and refreshes its ancestors along one root path.
  void set(std::size_t i, double value) {
    if (i >= capacity_) throw PreconditionError("SumTree::set: leaf index out of range");
    if (!(value >= 0.0) || !std::isfinite(value))
      throw PreconditionError("SumTree::set: leaf value must be finite and >= 0");
    std::size_t node = capacity_ + i;
    nodes_[node] = value;
    for (node /= 2; node >= 1; node /= 2) nodes_[node] = nodes_[2 * node] + nodes_[2 * node + 1];
  }

  // Leaf whose cumulative interval contains `mass`, skipping zero leaves.
  std::size_t find(double mass) const {
    std::size_t node = 1;
    while (node < capacity_) {
      const double left = nodes_[2 * node];
      if (mass < left || nodes_[2 * node + 1] <= 0.0) {
        node = 2 * node;
      } else {
        mass -= left;
        node = 2 * node + 1;
      }
    }
    return node - capacity_;
  }

  // Largest |node - (left + right)| over all internal nodes.
  double audit() const {
    double worst = 0.0;
    for (std::size_t i = 1; i < capacity_; ++i)
      worst = std::max(worst, std::abs(nodes_[i] - (nodes_[2 * i] + nodes_[2 * i + 1])));
    return worst;
  }

  const std::vector<double>& nodes() const { return nodes_; }

  void clear() { std::fill(nodes_.begin(), nodes_.end(), 0.0); }

 private:
  std::size_t capacity_ = 0;
  std::vector<double> nodes_;
};

}  // namespace oel::per

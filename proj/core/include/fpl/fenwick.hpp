#pragma once

#include <cstdint>
#include <vector>

namespace fpl {

// Fenwick (binary indexed) tree over integer weights with O(log n) update,
// prefix sum and weighted sampling. Weights are component sizes, so exact
// integer arithmetic makes sampling free of floating-point bias.
class FenwickTree {
 public:
  void init(std::size_t n) {
    n_ = n;
    tree_.assign(n + 1, 0);
    total_ = 0;
    top_ = 1;
    while (top_ * 2 <= n_) top_ *= 2;
  }

  std::size_t size() const { return n_; }
  std::int64_t total() const { return total_; }

  // Adds delta to the weight of 0-based slot i.
  void add(std::size_t i, std::int64_t delta) {
    total_ += delta;
    for (std::size_t j = i + 1; j <= n_; j += j & (0 - j)) tree_[j] += delta;
  }

  // Sum of weights of slots [0, i).
  std::int64_t prefix(std::size_t i) const {
    std::int64_t s = 0;
    for (std::size_t j = i; j > 0; j -= j & (0 - j)) s += tree_[j];
    return s;
  }

  // Smallest 0-based slot i with prefix(i+1) > r, for r in [0, total).
  // Descends the implicit tree, so a slot is drawn with probability
  // proportional to its weight when r is uniform on [0, total).
  std::size_t find(std::int64_t r) const {
    std::size_t pos = 0;
    for (std::size_t step = top_; step > 0; step >>= 1) {
      std::size_t next = pos + step;
      if (next <= n_ && tree_[next] <= r) {
        r -= tree_[next];
        pos = next;
      }
    }
    return pos;  // 0-based
  }

 private:
  std::vector<std::int64_t> tree_;  // 1-based
  std::int64_t total_ = 0;
  std::size_t n_ = 0;
  std::size_t top_ = 1;
};

}  // namespace fpl

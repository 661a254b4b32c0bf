#pragma once

// Categorical samplers used by the event engine.

#include <cstddef>
#include <span>
#include <vector>

#include "exclab/error.hpp"
#include "exclab/rng.hpp"

namespace exclab {

/// Walker/Vose alias table: O(1) draws from a fixed discrete distribution.
class AliasTable {
 public:
  AliasTable() = default;
  explicit AliasTable(std::span<const double> weights) {
    const std::size_t n = weights.size();
    if (n == 0) throw InvalidArgument("AliasTable: empty weight vector");
    double total = 0.0;
    for (double w : weights) {
      if (!(w >= 0.0)) throw InvalidArgument("AliasTable: negative weight");
      total += w;
    }
    if (!(total > 0.0)) throw InvalidArgument("AliasTable: weights sum to zero");
    total_ = total;
    prob_.assign(n, 0.0);
    alias_.assign(n, 0);
    std::vector<double> scaled(n);
    std::vector<std::size_t> small, large;
    for (std::size_t i = 0; i < n; ++i) {
      scaled[i] = weights[i] * static_cast<double>(n) / total;
      (scaled[i] < 1.0 ? small : large).push_back(i);
    }
    while (!small.empty() && !large.empty()) {
      const std::size_t s = small.back();
      small.pop_back();
      const std::size_t l = large.back();
      prob_[s] = scaled[s];
      alias_[s] = l;
      scaled[l] = (scaled[l] + scaled[s]) - 1.0;
      if (scaled[l] < 1.0) {
        large.pop_back();
        small.push_back(l);
      }
    }
    for (std::size_t i : large) prob_[i] = 1.0;
    for (std::size_t i : small) prob_[i] = 1.0;
  }

  std::size_t size() const { return prob_.size(); }
  double total_weight() const { return total_; }

  std::size_t sample(RngStream& rng) const {
    const std::size_t column = rng.below(prob_.size());
    return rng.uniform() < prob_[column] ? column : alias_[column];
  }

 private:
  std::vector<double> prob_;
  std::vector<std::size_t> alias_;
  double total_ = 0.0;
};

/// Binary-indexed tree over non-negative rates with O(log n) update and search.
class FenwickTree {
 public:
  FenwickTree() = default;
  explicit FenwickTree(std::size_t n) : tree_(n + 1, 0.0), values_(n, 0.0) {}

  std::size_t size() const { return values_.size(); }
  double value(std::size_t i) const { return values_[i]; }

  void set(std::size_t i, double v) {
    const double delta = v - values_[i];
    values_[i] = v;
    if (delta == 0.0) return;
    for (std::size_t k = i + 1; k < tree_.size(); k += k & (~k + 1)) tree_[k] += delta;
    if (++updates_ >= kRebuildEvery) rebuild();
  }

  /// Recompute all partial sums from the stored values (clears drift).
  void rebuild() {
    std::fill(tree_.begin(), tree_.end(), 0.0);
    for (std::size_t i = 0; i < values_.size(); ++i) {
      tree_[i + 1] += values_[i];
      const std::size_t parent = (i + 1) + ((i + 1) & (~(i + 1) + 1));
      if (parent < tree_.size()) tree_[parent] += tree_[i + 1];
    }
    updates_ = 0;
  }

  double total() const {
    double s = 0.0;
    for (std::size_t k = values_.size(); k > 0; k -= k & (~k + 1)) s += tree_[k];
    return s;
  }

  /// Smallest index i with prefix(i) > target; target in [0, total()).
  /// Lands only on slots with positive value.
  std::size_t find(double target) const {
    std::size_t pos = 0;
    std::size_t step = 1;
    while (step * 2 <= values_.size()) step *= 2;
    for (; step > 0; step /= 2) {
      const std::size_t next = pos + step;
      if (next < tree_.size() && tree_[next] <= target) {
        pos = next;
        target -= tree_[next];
      }
    }
    // pos is the count of slots whose cumulative sum is <= target.
    std::size_t i = pos < values_.size() ? pos : values_.size() - 1;
    while (values_[i] <= 0.0 && i > 0) --i;  // rounding can overshoot past the last live slot
    while (values_[i] <= 0.0 && i + 1 < values_.size()) ++i;
    return i;
  }

 private:
  static constexpr long kRebuildEvery = 1L << 20;
  std::vector<double> tree_;
  std::vector<double> values_;
  long updates_ = 0;
};

}  // namespace exclab

#pragma once

#include <cassert>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>

namespace hybridrf {

enum class Metric { gini, entropy };

std::string_view to_string(Metric metric);
// Throws ConfigError on an unknown name.
Metric parse_metric(std::string_view name);

// Bootstrap-weighted per-class example counts.
struct ClassCounts {
  std::uint64_t zeros = 0;
  std::uint64_t ones = 0;

  constexpr std::uint64_t total() const { return zeros + ones; }
  constexpr bool pure() const { return zeros == 0 || ones == 0; }
  constexpr void add(std::uint32_t label, std::uint64_t weight) {
    (label ? ones : zeros) += weight;
  }

  friend constexpr ClassCounts operator+(ClassCounts a, ClassCounts b) {
    return {a.zeros + b.zeros, a.ones + b.ones};
  }
  friend constexpr ClassCounts operator-(ClassCounts a, ClassCounts b) {
    return {a.zeros - b.zeros, a.ones - b.ones};
  }
  friend constexpr bool operator==(ClassCounts, ClassCounts) = default;
};

// Impurity functions. Throw std::invalid_argument on a zero total.
double gini(ClassCounts counts);
double entropy(ClassCounts counts);
double impurity(ClassCounts counts, Metric metric);

// impurity(parent) - weighted child impurity. Exactly 0 when both children
// carry the parent's class proportions. Throws std::invalid_argument unless
// left + right == parent and both children are non-empty.
double split_gain(ClassCounts parent, ClassCounts left, ClassCounts right, Metric metric);

// Rounds the midpoint of two consecutive distinct values to float, keeping
// lo <= threshold < hi.
float split_threshold(float lo, float hi);

struct Split {
  std::uint32_t feature = 0;
  float threshold = 0.0f;
  double gain = 0.0;
  ClassCounts left;
  ClassCounts right;

  friend bool operator==(const Split&, const Split&) = default;
};

// std::nullopt is the NoSplit outcome.
using SplitDecision = std::optional<Split>;

// Incremental exact split search over one column, fed in ascending value
// order. The running prefix counts are the left child of every candidate
// threshold placed between consecutive distinct values.
class SplitScanner {
 public:
  SplitScanner() = default;
  SplitScanner(ClassCounts parent, Metric metric, std::uint64_t min_leaf_weight);

  void push(float value, std::uint32_t label, std::uint64_t weight) {
    if (weight == 0) return;
    assert(!seen_ || value >= last_);
    if (seen_ && value > last_) consider(value);
    running_.add(label, weight);
    last_ = value;
    seen_ = true;
  }

  SplitDecision finish(std::uint32_t feature) const;

 private:
  void consider(float next_value);

  ClassCounts parent_;
  ClassCounts running_;
  ClassCounts best_left_;
  std::uint64_t min_leaf_ = 1;
  double parent_impurity_ = 0.0;
  double best_gain_ = 0.0;
  float last_ = 0.0f;
  float best_lo_ = 0.0f;
  float best_hi_ = 0.0f;
  Metric metric_ = Metric::gini;
  bool seen_ = false;
  bool found_ = false;
};

struct ColumnEntry {
  float value;
  std::uint32_t label;
  std::uint64_t weight;
};

// Exact best split of one sorted column. Zero-weight entries are ignored.
// Ties in gain keep the smaller threshold. NoSplit when nothing gains.
SplitDecision best_split_in_column(std::span<const ColumnEntry> entries, Metric metric,
                                   std::uint64_t min_leaf_weight = 1,
                                   std::uint32_t feature = 0);

// true when `a` should replace `b`: higher gain, then lower feature index,
// then lower threshold.
bool split_precedes(const Split& a, const Split& b);

SplitDecision best_split_across_features(std::span<const SplitDecision> per_feature);

}  // namespace hybridrf

#include "hybridrf/splitting.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "hybridrf/error.hpp"

namespace hybridrf {
namespace {

double gini_unchecked(ClassCounts c) {
  const double total = static_cast<double>(c.total());
  const double p0 = static_cast<double>(c.zeros) / total;
  const double p1 = static_cast<double>(c.ones) / total;
  return 1.0 - p0 * p0 - p1 * p1;
}

double entropy_unchecked(ClassCounts c) {
  const double total = static_cast<double>(c.total());
  double h = 0.0;
  for (const std::uint64_t count : {c.zeros, c.ones}) {
    if (count == 0) continue;
    const double p = static_cast<double>(count) / total;
    h -= p * std::log2(p);
  }
  return h;
}

double impurity_unchecked(ClassCounts c, Metric metric) {
  return metric == Metric::gini ? gini_unchecked(c) : entropy_unchecked(c);
}

// Children with the parent's class mix gain exactly nothing; decided in
// integers so rounding never turns it into a tiny positive gain.
bool same_proportions(ClassCounts parent, ClassCounts child) {
  using wide = unsigned __int128;
  return wide{child.zeros} * parent.total() == wide{parent.zeros} * child.total();
}

double gain_given_parent(double parent_impurity, ClassCounts parent, ClassCounts left,
                         ClassCounts right, Metric metric) {
  if (same_proportions(parent, left)) return 0.0;
  const double total = static_cast<double>(parent.total());
  const double weighted =
      static_cast<double>(left.total()) / total * impurity_unchecked(left, metric) +
      static_cast<double>(right.total()) / total * impurity_unchecked(right, metric);
  return std::max(0.0, parent_impurity - weighted);
}

void require_nonempty(ClassCounts c) {
  if (c.total() == 0) throw std::invalid_argument("impurity of an empty node");
}

}  // namespace

std::string_view to_string(Metric metric) {
  return metric == Metric::gini ? "gini" : "entropy";
}

Metric parse_metric(std::string_view name) {
  if (name == "gini") return Metric::gini;
  if (name == "entropy") return Metric::entropy;
  throw ConfigError("unknown metric '" + std::string(name) + "' (expected gini|entropy)");
}

double gini(ClassCounts counts) {
  require_nonempty(counts);
  return gini_unchecked(counts);
}

double entropy(ClassCounts counts) {
  require_nonempty(counts);
  return entropy_unchecked(counts);
}

double impurity(ClassCounts counts, Metric metric) {
  require_nonempty(counts);
  return impurity_unchecked(counts, metric);
}

double split_gain(ClassCounts parent, ClassCounts left, ClassCounts right, Metric metric) {
  if (left + right != parent) throw std::invalid_argument("child counts do not sum to parent");
  if (left.total() == 0 || right.total() == 0) throw std::invalid_argument("empty child");
  return gain_given_parent(impurity_unchecked(parent, metric), parent, left, right, metric);
}

float split_threshold(float lo, float hi) {
  const double mid = (static_cast<double>(lo) + static_cast<double>(hi)) / 2.0;
  const auto threshold = static_cast<float>(mid);
  // Adjacent floats: the midpoint may round up onto hi.
  return threshold < hi ? threshold : lo;
}

SplitScanner::SplitScanner(ClassCounts parent, Metric metric, std::uint64_t min_leaf_weight)
    : parent_(parent),
      min_leaf_(min_leaf_weight),
      parent_impurity_(parent.total() > 0 ? impurity_unchecked(parent, metric) : 0.0),
      metric_(metric) {}

void SplitScanner::consider(float next_value) {
  const ClassCounts& left = running_;
  const ClassCounts right = parent_ - running_;
  if (left.total() < min_leaf_ || right.total() < min_leaf_) return;
  const double gain = gain_given_parent(parent_impurity_, parent_, left, right, metric_);
  if (gain > best_gain_) {
    best_gain_ = gain;
    best_lo_ = last_;
    best_hi_ = next_value;
    best_left_ = left;
    found_ = true;
  }
}

SplitDecision SplitScanner::finish(std::uint32_t feature) const {
  if (!found_) return std::nullopt;
  return Split{feature, split_threshold(best_lo_, best_hi_), best_gain_, best_left_,
               parent_ - best_left_};
}

SplitDecision best_split_in_column(std::span<const ColumnEntry> entries, Metric metric,
                                   std::uint64_t min_leaf_weight, std::uint32_t feature) {
  ClassCounts parent;
  for (const auto& e : entries) parent.add(e.label, e.weight);
  SplitScanner scanner(parent, metric, min_leaf_weight);
  for (const auto& e : entries) scanner.push(e.value, e.label, e.weight);
  return scanner.finish(feature);
}

bool split_precedes(const Split& a, const Split& b) {
  if (a.gain != b.gain) return a.gain > b.gain;
  if (a.feature != b.feature) return a.feature < b.feature;
  return a.threshold < b.threshold;
}

SplitDecision best_split_across_features(std::span<const SplitDecision> per_feature) {
  SplitDecision best;
  for (const auto& candidate : per_feature) {
    if (candidate && (!best || split_precedes(*candidate, *best))) best = candidate;
  }
  return best;
}

}  // namespace hybridrf

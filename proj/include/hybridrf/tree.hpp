#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "hybridrf/splitting.hpp"

namespace hybridrf {

// Per-node growth controls shared by the breadth-first and depth-first
// builders.
struct GrowthLimits {
  std::optional<std::size_t> max_depth;  // nullopt = unbounded
  std::size_t max_features = 1;
  std::uint64_t min_leaf_weight = 1;
  Metric metric = Metric::gini;

  // A node stops (becomes a leaf without drawing features) when it is pure,
  // sits at max_depth, or is too light for two children of min_leaf_weight.
  bool stops(ClassCounts counts, std::size_t depth) const {
    return counts.pure() || (max_depth && depth >= *max_depth) ||
           counts.total() < 2 * min_leaf_weight;
  }
};

// Split nodes carry feature/threshold/children; leaves carry weighted class
// counts. Routing rule: value <= threshold goes left.
struct TreeNode {
  static constexpr std::int32_t kLeaf = -1;

  std::int32_t feature = kLeaf;
  float threshold = 0.0f;
  std::int32_t left = -1;
  std::int32_t right = -1;
  ClassCounts counts;

  bool is_leaf() const { return feature == kLeaf; }
  // argmax of the leaf counts, ties to class 0.
  std::uint32_t predicted_class() const { return counts.ones > counts.zeros ? 1u : 0u; }

  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

// A trained tree in canonical pre-order (root first, left subtree before
// right subtree), so builders that create nodes in different orders yield
// identical node arrays.
class TreeModel {
 public:
  TreeModel() = default;
  // Takes nodes already in canonical order; validates references.
  explicit TreeModel(std::vector<TreeNode> nodes);

  std::span<const TreeNode> nodes() const { return nodes_; }
  std::size_t size() const { return nodes_.size(); }
  const TreeNode& leaf_for(std::span<const float> example) const;
  std::uint32_t predict(std::span<const float> example) const {
    return leaf_for(example).predicted_class();
  }
  // Length in edges of the longest root-to-leaf path.
  std::size_t depth() const;
  std::size_t num_leaves() const;

  friend bool operator==(const TreeModel&, const TreeModel&) = default;

 private:
  std::vector<TreeNode> nodes_;
};

// Node storage used while a tree is being grown. Ids are handed out in
// creation order, which differs between BFS and DFS; finish() renumbers.
class NodeArena {
 public:
  std::int32_t create();
  void set_leaf(std::int32_t id, ClassCounts counts);
  // Creates the two children and returns their ids.
  std::pair<std::int32_t, std::int32_t> set_split(std::int32_t id, std::uint32_t feature,
                                                  float threshold);
  std::size_t size() const { return nodes_.size(); }
  const TreeNode& operator[](std::int32_t id) const { return nodes_[id]; }

  // Pre-order renumbering rooted at node 0. Throws InvariantError when a
  // node was created but never finalised.
  TreeModel finish() &&;

 private:
  std::vector<TreeNode> nodes_;
  std::vector<bool> finalised_;
};

}  // namespace hybridrf

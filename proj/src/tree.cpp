#include "hybridrf/tree.hpp"

#include <algorithm>
#include <string>

#include "hybridrf/error.hpp"

namespace hybridrf {

TreeModel::TreeModel(std::vector<TreeNode> nodes) : nodes_(std::move(nodes)) {
  if (nodes_.empty()) throw InvariantError("tree has no nodes");
  // Walking pre-order from the root must visit 0, 1, 2, ... exactly once each.
  std::vector<std::int32_t> stack{0};
  std::size_t expected = 0;
  while (!stack.empty()) {
    const std::int32_t id = stack.back();
    stack.pop_back();
    if (id < 0 || static_cast<std::size_t>(id) != expected) {
      throw InvariantError("node " + std::to_string(expected) + " out of pre-order (got " +
                           std::to_string(id) + ")");
    }
    ++expected;
    const TreeNode& node = nodes_[id];
    if (node.is_leaf()) {
      if (node.counts.total() == 0) throw InvariantError("empty leaf " + std::to_string(id));
      continue;
    }
    if (node.feature < 0) throw InvariantError("bad feature at node " + std::to_string(id));
    const auto n = static_cast<std::int32_t>(nodes_.size());
    if (node.left <= id || node.left >= n || node.right <= id || node.right >= n) {
      throw InvariantError("bad child reference at node " + std::to_string(id));
    }
    stack.push_back(node.right);
    stack.push_back(node.left);
  }
  if (expected != nodes_.size()) throw InvariantError("unreachable nodes in tree");
}

const TreeNode& TreeModel::leaf_for(std::span<const float> example) const {
  const TreeNode* node = &nodes_.front();
  while (!node->is_leaf()) {
    node = &nodes_[example[node->feature] <= node->threshold ? node->left : node->right];
  }
  return *node;
}

std::size_t TreeModel::depth() const {
  std::vector<std::size_t> depth_of(nodes_.size(), 0);
  std::size_t deepest = 0;
  // Pre-order: parents precede children.
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    deepest = std::max(deepest, depth_of[i]);
    if (!nodes_[i].is_leaf()) {
      depth_of[nodes_[i].left] = depth_of[i] + 1;
      depth_of[nodes_[i].right] = depth_of[i] + 1;
    }
  }
  return deepest;
}

std::size_t TreeModel::num_leaves() const {
  return static_cast<std::size_t>(
      std::count_if(nodes_.begin(), nodes_.end(), [](const TreeNode& n) { return n.is_leaf(); }));
}

std::int32_t NodeArena::create() {
  nodes_.emplace_back();
  finalised_.push_back(false);
  return static_cast<std::int32_t>(nodes_.size() - 1);
}

void NodeArena::set_leaf(std::int32_t id, ClassCounts counts) {
  TreeNode& node = nodes_.at(id);
  node = TreeNode{};
  node.counts = counts;
  finalised_[id] = true;
}

std::pair<std::int32_t, std::int32_t> NodeArena::set_split(std::int32_t id,
                                                           std::uint32_t feature,
                                                           float threshold) {
  const std::int32_t left = create();
  const std::int32_t right = create();
  TreeNode& node = nodes_.at(id);
  node = TreeNode{static_cast<std::int32_t>(feature), threshold, left, right, {}};
  finalised_[id] = true;
  return {left, right};
}

TreeModel NodeArena::finish() && {
  if (nodes_.empty()) throw InvariantError("empty arena");
  std::vector<TreeNode> ordered;
  ordered.reserve(nodes_.size());
  // (arena id, slot in `ordered` of the parent's child link to patch)
  struct Pending {
    std::int32_t id;
    std::int32_t parent;
    bool is_left;
  };
  std::vector<Pending> stack{{0, -1, false}};
  while (!stack.empty()) {
    const Pending p = stack.back();
    stack.pop_back();
    if (!finalised_[p.id]) throw InvariantError("node " + std::to_string(p.id) + " never finalised");
    const auto new_id = static_cast<std::int32_t>(ordered.size());
    ordered.push_back(nodes_[p.id]);
    if (p.parent >= 0) (p.is_left ? ordered[p.parent].left : ordered[p.parent].right) = new_id;
    const TreeNode& node = nodes_[p.id];
    if (!node.is_leaf()) {
      stack.push_back({node.right, new_id, false});
      stack.push_back({node.left, new_id, true});
    }
  }
  return TreeModel(std::move(ordered));
}

}  // namespace hybridrf

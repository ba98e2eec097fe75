#include "hybridrf/bfs_builder.hpp"

#include <string>

namespace hybridrf {

ExampleToNodeMap::ExampleToNodeMap(const BootstrapSample& sample) {
  const std::size_t n = sample.num_examples();
  slots_.resize(n);
  active_.reserve(sample.total_weight < n ? sample.total_weight : n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint32_t w = sample.multiplicity[i];
    slots_[i] = {w > 0 ? 0 : kInactive, w};
    if (w > 0) active_.push_back(static_cast<std::uint32_t>(i));
  }
}

std::uint64_t ExampleToNodeMap::frontier_weight() const {
  std::uint64_t sum = 0;
  for (const Slot& s : slots_) {
    if (s.node >= 0) sum += s.weight;
  }
  return sum;
}

std::uint64_t ExampleToNodeMap::terminal_weight() const {
  std::uint64_t sum = 0;
  for (const Slot& s : slots_) {
    if (s.node == kTerminal) sum += s.weight;
  }
  return sum;
}

LevelOutcome bfs_partition(ExampleToNodeMap& map, const FrontierLevel& level,
                           std::span<const SplitDecision> decisions, const Dataset& data,
                           NodeArena& arena,
                           const std::function<ChildFate(const ChildInfo&)>& fate) {
  const std::size_t num_nodes = level.nodes.size();
  if (decisions.size() != num_nodes) throw InvariantError("one decision per frontier node expected");

  // Pass 1: route every active example to child 2s (left) or 2s+1 (right)
  // and recount the children.
  std::vector<ChildInfo> children(2 * num_nodes);
  for (auto& child : children) child.depth = level.depth + 1;
  for (const std::uint32_t example : map.active()) {
    const std::int32_t slot = map.node(example);
    if (slot < 0 || static_cast<std::size_t>(slot) >= num_nodes) {
      throw InvariantError("active example " + std::to_string(example) + " not on the frontier");
    }
    const SplitDecision& decision = decisions[slot];
    if (!decision) {
      map.assign(example, ExampleToNodeMap::kTerminal);
      continue;
    }
    const bool right = !(data.value(example, decision->feature) <= decision->threshold);
    const auto child = static_cast<std::int32_t>(2 * slot + (right ? 1 : 0));
    children[child].counts.add(data.label(example), map.weight(example));
    ++children[child].distinct;
    map.assign(example, child);
  }

  LevelOutcome outcome;
  outcome.next.depth = level.depth + 1;
  std::vector<std::int32_t> code(2 * num_nodes, ExampleToNodeMap::kTerminal);
  for (std::size_t s = 0; s < num_nodes; ++s) {
    const FrontierNode& node = level.nodes[s];
    const SplitDecision& decision = decisions[s];
    if (!decision) {
      arena.set_leaf(node.tree_node, node.counts);
      continue;
    }
    if (children[2 * s].counts != decision->left || children[2 * s + 1].counts != decision->right) {
      throw InvariantError("child counts of tree node " + std::to_string(node.tree_node) +
                           " disagree with the split decision");
    }
    const auto [left_id, right_id] =
        arena.set_split(node.tree_node, decision->feature, decision->threshold);
    for (const std::size_t side : {0, 1}) {
      const std::size_t t = 2 * s + side;
      const ChildInfo& info = children[t];
      const std::int32_t id = side == 0 ? left_id : right_id;
      switch (fate(info)) {
        case ChildFate::leaf:
          arena.set_leaf(id, info.counts);
          break;
        case ChildFate::frontier:
          code[t] = static_cast<std::int32_t>(outcome.next.nodes.size());
          outcome.next.nodes.push_back({id, info.counts, info.distinct});
          break;
        case ChildFate::deferred:
          code[t] = ExampleToNodeMap::deferred_code(outcome.deferred.size());
          outcome.deferred.push_back({id, info.counts, info.distinct});
          break;
      }
    }
  }

  // Pass 2: child codes become next-level slots, deferred codes or terminal.
  std::vector<std::uint32_t> next_active;
  next_active.reserve(map.active().size());
  for (const std::uint32_t example : map.active()) {
    const std::int32_t child = map.node(example);
    if (child == ExampleToNodeMap::kTerminal) continue;
    const std::int32_t target = code[child];
    map.assign(example, target);
    if (target >= 0) {
      next_active.push_back(example);
    } else if (ExampleToNodeMap::is_deferred(target)) {
      outcome.deferred_examples.push_back(example);
    }
  }
  map.set_active(std::move(next_active));
  return outcome;
}

}  // namespace hybridrf

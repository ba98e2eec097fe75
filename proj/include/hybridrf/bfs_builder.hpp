#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "hybridrf/dataset.hpp"
#include "hybridrf/error.hpp"
#include "hybridrf/example_map.hpp"
#include "hybridrf/splitting.hpp"
#include "hybridrf/tree.hpp"

namespace hybridrf {

struct FrontierNode {
  std::int32_t tree_node = 0;
  ClassCounts counts;
  std::uint64_t distinct = 0;  // number of distinct examples

  friend bool operator==(const FrontierNode&, const FrontierNode&) = default;
};

struct FrontierLevel {
  std::size_t depth = 0;
  std::vector<FrontierNode> nodes;  // slot s of the map is nodes[s]
  std::vector<std::uint32_t> feature_subset;
};

// One breadth-first iteration: every selected column is walked once, front to
// back, feeding each entry to the running scanner of the frontier node that
// owns the example. Returns the best split of every frontier node over the
// level's shared feature subset.
//
// `Matrix` needs num_examples() and at(feature, position). The example slot of
// the entry `prefetch_distance` positions ahead is prefetched; entries are
// still read exactly once and in order (via a small ring buffer).
template <class Matrix>
std::vector<SplitDecision> bfs_level_step(const Matrix& matrix, const ExampleToNodeMap& map,
                                          const FrontierLevel& level, Metric metric,
                                          std::uint64_t min_leaf_weight,
                                          std::size_t prefetch_distance) {
  const std::size_t num_nodes = level.nodes.size();
  const std::size_t num_selected = level.feature_subset.size();
  const std::size_t n = matrix.num_examples();
  std::vector<SplitDecision> decisions(num_nodes);
  if (num_nodes == 0) return decisions;

  // (node slot x feature slot) results, node-major.
  std::vector<SplitDecision> per_feature(num_nodes * num_selected);
  std::vector<SplitScanner> scanners(num_nodes);

  const std::size_t ring_size = std::bit_ceil(prefetch_distance + 1);
  const std::size_t ring_mask = ring_size - 1;
  std::vector<SortedEntry> ring(prefetch_distance > 0 ? ring_size : 0);

  auto visit = [&](const SortedEntry& entry) {
    const std::uint32_t example = entry.index();
    const std::int32_t slot = map.node(example);
    if (slot < 0) return;
    if (static_cast<std::size_t>(slot) >= num_nodes) {
      throw InvariantError("example " + std::to_string(example) +
                           " mapped to slot outside the frontier");
    }
    scanners[slot].push(entry.value, entry.label(), map.weight(example));
  };

  for (std::size_t fs = 0; fs < num_selected; ++fs) {
    const std::uint32_t feature = level.feature_subset[fs];
    for (std::size_t s = 0; s < num_nodes; ++s) {
      scanners[s] = SplitScanner(level.nodes[s].counts, metric, min_leaf_weight);
    }
    if (prefetch_distance == 0) {
      for (std::size_t i = 0; i < n; ++i) visit(matrix.at(feature, i));
    } else {
      const std::size_t end = n + prefetch_distance;
      for (std::size_t i = 0; i < end; ++i) {
        if (i < n) {
          const SortedEntry& ahead = matrix.at(feature, i);
          __builtin_prefetch(map.slot_address(ahead.index()));
          ring[i & ring_mask] = ahead;
        }
        if (i >= prefetch_distance) visit(ring[(i - prefetch_distance) & ring_mask]);
      }
    }
    for (std::size_t s = 0; s < num_nodes; ++s) {
      per_feature[s * num_selected + fs] = scanners[s].finish(feature);
    }
  }

  for (std::size_t s = 0; s < num_nodes; ++s) {
    decisions[s] = best_split_across_features(
        std::span<const SplitDecision>(per_feature).subspan(s * num_selected, num_selected));
  }
  return decisions;
}

enum class ChildFate { leaf, frontier, deferred };

struct ChildInfo {
  ClassCounts counts;
  std::uint64_t distinct = 0;
  std::size_t depth = 0;
};

struct LevelOutcome {
  FrontierLevel next;  // feature_subset left empty for the caller to draw
  // Nodes handed over to depth-first growth. Their examples are mapped to
  // ExampleToNodeMap::deferred_code(i) and listed (ascending) in
  // deferred_examples.
  std::vector<FrontierNode> deferred;
  std::vector<std::uint32_t> deferred_examples;
};

// Applies the level's decisions: NoSplit nodes become leaves, split nodes get
// two children in `arena`, and every active example is routed by
// value(example, feature) <= threshold. Child counts are recomputed and
// checked against the decisions (InvariantError on mismatch). `fate` decides
// for each child whether it is a leaf, stays on the frontier, or is deferred.
LevelOutcome bfs_partition(ExampleToNodeMap& map, const FrontierLevel& level,
                           std::span<const SplitDecision> decisions, const Dataset& data,
                           NodeArena& arena,
                           const std::function<ChildFate(const ChildInfo&)>& fate);

}  // namespace hybridrf

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "hybridrf/dataset.hpp"
#include "hybridrf/example_map.hpp"
#include "hybridrf/sampling.hpp"
#include "hybridrf/splitting.hpp"
#include "hybridrf/tree.hpp"

namespace hybridrf {

// Compacted copy of the sorted columns restricted to one node's distinct
// active examples. Entries carry node-local positions (0..size-1) in place of
// global example indices; weights are indexed by the same positions.
class PackedNodeMatrix {
 public:
  PackedNodeMatrix() = default;
  // `entries` holds num_features columns of `length` entries each.
  PackedNodeMatrix(std::size_t length, std::size_t num_features,
                   std::vector<SortedEntry> entries, std::vector<std::uint32_t> weights);

  std::size_t size() const { return length_; }
  std::size_t num_features() const { return num_features_; }
  std::span<const SortedEntry> column(std::size_t feature) const {
    return {entries_.data() + feature * length_, length_};
  }
  std::span<const std::uint32_t> weights() const { return weights_; }
  ClassCounts counts() const { return counts_; }
  std::size_t bytes() const { return length_ * num_features_ * sizeof(SortedEntry); }

  // Sortedness, equal-length and same-example-set checks (InvariantError).
  void check_invariants() const;

 private:
  friend class DfsBuilder;

  std::size_t length_ = 0;
  std::size_t num_features_ = 0;
  std::vector<SortedEntry> entries_;
  std::vector<std::uint32_t> weights_;
  ClassCounts counts_;
};

// Copies the sorted-matrix entries of several map nodes (frontier slots or
// deferred codes) into packed matrices with one filtered pass per column.
// `examples` lists every example of those nodes in ascending order; local
// positions follow that order. Results come back in `node_codes` order.
std::vector<PackedNodeMatrix> extract_packed(const SortedMatrix& matrix,
                                             const ExampleToNodeMap& map,
                                             std::span<const std::uint32_t> examples,
                                             std::span<const std::int32_t> node_codes);

// Same result as extract_packed, built by gathering each node's values from
// the dataset and sorting them. Cheaper when the nodes hold few examples
// compared with the length of the sorted columns.
std::vector<PackedNodeMatrix> gather_packed(const Dataset& data, const ExampleToNodeMap& map,
                                            std::span<const std::uint32_t> examples,
                                            std::span<const std::int32_t> node_codes);

// Single node convenience: gathers the node's examples from the map.
PackedNodeMatrix extract_packed(const SortedMatrix& matrix, const ExampleToNodeMap& map,
                                std::int32_t node_code);

enum class PartitionStrategy {
  reuse_parent,  // smaller child copied fresh, larger child compacts the parent
  copy_both,     // naive baseline: both children freshly allocated
};

struct DfsCounters {
  std::uint64_t splits = 0;
  std::uint64_t fresh_columns = 0;  // packed columns allocated by partitions
  std::uint64_t fresh_buffers = 0;  // backing allocations behind those columns
};

class DfsBuilder {
 public:
  explicit DfsBuilder(GrowthLimits limits,
                      PartitionStrategy strategy = PartitionStrategy::reuse_parent,
                      bool check_every_node = false);

  // Depth-first growth of the subtree rooted at `node` (already created in
  // the arena, at `depth`). Left children are expanded before right ones.
  // Each node searches the feature subset of its depth.
  void build(PackedNodeMatrix matrix, std::size_t depth, std::int32_t node,
             DepthFeatureSubsets& features, NodeArena& arena);

  // Splits `parent` into (left, right). Side membership comes from the split
  // feature's column; other columns are filtered by that assignment.
  std::pair<PackedNodeMatrix, PackedNodeMatrix> partition(PackedNodeMatrix&& parent,
                                                          const Split& split);

  // Best split over the given features of a packed matrix.
  SplitDecision best_split(const PackedNodeMatrix& matrix,
                           std::span<const std::uint32_t> features) const;

  const DfsCounters& counters() const { return counters_; }

 private:
  GrowthLimits limits_;
  PartitionStrategy strategy_;
  bool check_every_node_;
  DfsCounters counters_;
  std::vector<std::uint64_t> side_bits_;
  std::vector<std::uint32_t> new_position_;
};

}  // namespace hybridrf

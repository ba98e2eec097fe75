#include "hybridrf/dfs_builder.hpp"

#include <algorithm>
#include <string>
#include <unordered_map>

#include "hybridrf/error.hpp"

namespace hybridrf {

PackedNodeMatrix::PackedNodeMatrix(std::size_t length, std::size_t num_features,
                                   std::vector<SortedEntry> entries,
                                   std::vector<std::uint32_t> weights)
    : length_(length),
      num_features_(num_features),
      entries_(std::move(entries)),
      weights_(std::move(weights)) {
  if (entries_.size() != length_ * num_features_ || weights_.size() != length_) {
    throw InvariantError("packed matrix storage does not match its shape");
  }
  if (num_features_ > 0) {
    for (const SortedEntry& e : column(0)) counts_.add(e.label(), weights_[e.index()]);
  }
}

void PackedNodeMatrix::check_invariants() const {
  std::vector<std::int8_t> label_of(length_, -1);
  for (std::size_t f = 0; f < num_features_; ++f) {
    std::vector<bool> seen(length_);
    auto col = column(f);
    for (std::size_t i = 0; i < length_; ++i) {
      const SortedEntry& e = col[i];
      const auto where = " (feature " + std::to_string(f) + ", position " + std::to_string(i) + ")";
      if (i > 0 && e.value < col[i - 1].value) throw InvariantError("packed column unsorted" + where);
      if (e.index() >= length_ || seen[e.index()]) {
        throw InvariantError("packed column is not a permutation" + where);
      }
      seen[e.index()] = true;
      if (weights_[e.index()] == 0) throw InvariantError("inactive example in packed column" + where);
      if (label_of[e.index()] < 0) {
        label_of[e.index()] = static_cast<std::int8_t>(e.label());
      } else if (label_of[e.index()] != static_cast<std::int8_t>(e.label())) {
        throw InvariantError("label differs between packed columns" + where);
      }
    }
  }
}

std::vector<PackedNodeMatrix> extract_packed(const SortedMatrix& matrix,
                                             const ExampleToNodeMap& map,
                                             std::span<const std::uint32_t> examples,
                                             std::span<const std::int32_t> node_codes) {
  const std::size_t num_groups = node_codes.size();
  const std::size_t m = matrix.num_features();
  std::unordered_map<std::int32_t, std::int32_t> group_of_code;
  for (std::size_t g = 0; g < num_groups; ++g) {
    group_of_code.emplace(node_codes[g], static_cast<std::int32_t>(g));
  }

  std::vector<std::int32_t> group_of(map.size(), -1);
  std::vector<std::uint32_t> local_of(map.size());
  std::vector<std::vector<std::uint32_t>> weights(num_groups);
  for (const std::uint32_t example : examples) {
    const auto it = group_of_code.find(map.node(example));
    if (it == group_of_code.end()) {
      throw InvariantError("example " + std::to_string(example) + " is not in a requested node");
    }
    auto& w = weights[it->second];
    group_of[example] = it->second;
    local_of[example] = static_cast<std::uint32_t>(w.size());
    w.push_back(map.weight(example));
  }

  std::vector<std::vector<SortedEntry>> entries(num_groups);
  for (std::size_t g = 0; g < num_groups; ++g) entries[g].resize(weights[g].size() * m);
  std::vector<std::size_t> cursor(num_groups);
  for (std::size_t f = 0; f < m; ++f) {
    for (std::size_t g = 0; g < num_groups; ++g) cursor[g] = f * weights[g].size();
    for (const SortedEntry& e : matrix.column(f)) {
      const std::int32_t g = group_of[e.index()];
      if (g < 0) continue;
      entries[g][cursor[g]++] = {e.value, SortedEntry::pack(local_of[e.index()], e.label())};
    }
  }

  std::vector<PackedNodeMatrix> packed;
  packed.reserve(num_groups);
  for (std::size_t g = 0; g < num_groups; ++g) {
    const std::size_t length = weights[g].size();
    packed.emplace_back(length, m, std::move(entries[g]), std::move(weights[g]));
  }
  return packed;
}

std::vector<PackedNodeMatrix> gather_packed(const Dataset& data, const ExampleToNodeMap& map,
                                            std::span<const std::uint32_t> examples,
                                            std::span<const std::int32_t> node_codes) {
  const std::size_t num_groups = node_codes.size();
  const std::size_t m = data.num_features();
  std::unordered_map<std::int32_t, std::size_t> group_of_code;
  for (std::size_t g = 0; g < num_groups; ++g) group_of_code.emplace(node_codes[g], g);
  std::vector<std::vector<std::uint32_t>> members(num_groups);
  for (const std::uint32_t example : examples) {
    const auto it = group_of_code.find(map.node(example));
    if (it == group_of_code.end()) {
      throw InvariantError("example " + std::to_string(example) + " is not in a requested node");
    }
    members[it->second].push_back(example);
  }

  std::vector<PackedNodeMatrix> packed;
  packed.reserve(num_groups);
  for (std::size_t g = 0; g < num_groups; ++g) {
    const auto& group = members[g];
    const std::size_t length = group.size();
    std::vector<std::uint32_t> weights(length);
    for (std::size_t p = 0; p < length; ++p) weights[p] = map.weight(group[p]);
    std::vector<SortedEntry> entries(length * m);
    for (std::size_t f = 0; f < m; ++f) {
      SortedEntry* column = entries.data() + f * length;
      for (std::size_t p = 0; p < length; ++p) {
        column[p] = {data.value(group[p], f),
                     SortedEntry::pack(static_cast<std::uint32_t>(p), data.label(group[p]))};
      }
      // Local positions ascend with example index, so this is the shared
      // matrix's (value, example) order.
      std::sort(column, column + length, [](const SortedEntry& a, const SortedEntry& b) {
        return a.value < b.value || (a.value == b.value && a.packed < b.packed);
      });
    }
    packed.emplace_back(length, m, std::move(entries), std::move(weights));
  }
  return packed;
}

PackedNodeMatrix extract_packed(const SortedMatrix& matrix, const ExampleToNodeMap& map,
                                std::int32_t node_code) {
  std::vector<std::uint32_t> examples;
  for (std::size_t i = 0; i < map.size(); ++i) {
    if (map.node(i) == node_code) examples.push_back(static_cast<std::uint32_t>(i));
  }
  const std::int32_t codes[] = {node_code};
  return std::move(extract_packed(matrix, map, examples, codes).front());
}

DfsBuilder::DfsBuilder(GrowthLimits limits, PartitionStrategy strategy, bool check_every_node)
    : limits_(limits), strategy_(strategy), check_every_node_(check_every_node) {}

SplitDecision DfsBuilder::best_split(const PackedNodeMatrix& matrix,
                                     std::span<const std::uint32_t> features) const {
  SplitDecision best;
  const auto weights = matrix.weights();
  for (const std::uint32_t f : features) {
    SplitScanner scanner(matrix.counts(), limits_.metric, limits_.min_leaf_weight);
    for (const SortedEntry& e : matrix.column(f)) {
      scanner.push(e.value, e.label(), weights[e.index()]);
    }
    const SplitDecision candidate = scanner.finish(f);
    if (candidate && (!best || split_precedes(*candidate, *best))) best = candidate;
  }
  return best;
}

std::pair<PackedNodeMatrix, PackedNodeMatrix> DfsBuilder::partition(PackedNodeMatrix&& parent,
                                                                     const Split& split) {
  const std::size_t length = parent.length_;
  const std::size_t m = parent.num_features_;
  const auto weights = parent.weights();

  // Side of every local position, read off the split feature's column.
  side_bits_.assign((length + 63) / 64, 0);
  ClassCounts left_counts;
  ClassCounts right_counts;
  std::size_t num_left = 0;
  for (const SortedEntry& e : parent.column(split.feature)) {
    const std::uint32_t p = e.index();
    if (e.value <= split.threshold) {
      side_bits_[p >> 6] |= std::uint64_t{1} << (p & 63);
      left_counts.add(e.label(), weights[p]);
      ++num_left;
    } else {
      right_counts.add(e.label(), weights[p]);
    }
  }
  const std::size_t num_right = length - num_left;
  if (left_counts != split.left || right_counts != split.right || num_left == 0 ||
      num_right == 0) {
    throw InvariantError("packed partition disagrees with the split decision");
  }
  auto goes_left = [this](std::uint32_t p) { return (side_bits_[p >> 6] >> (p & 63)) & 1u; };

  // Children keep positions in parent order, renumbered densely per side.
  new_position_.resize(length);
  {
    std::uint32_t next_left = 0;
    std::uint32_t next_right = 0;
    for (std::uint32_t p = 0; p < length; ++p) {
      new_position_[p] = goes_left(p) ? next_left++ : next_right++;
    }
  }

  const bool left_is_fresh = num_left <= num_right;
  const bool reuse = strategy_ == PartitionStrategy::reuse_parent;
  std::vector<SortedEntry> fresh_small;
  std::vector<SortedEntry> fresh_large;
  std::vector<std::uint32_t> small_weights;
  std::vector<std::uint32_t> large_weights;
  const std::size_t num_small = left_is_fresh ? num_left : num_right;
  const std::size_t num_large = length - num_small;
  fresh_small.resize(num_small * m);
  small_weights.resize(num_small);
  if (!reuse) {
    fresh_large.resize(num_large * m);
    large_weights.resize(num_large);
  }
  ++counters_.splits;
  counters_.fresh_columns += reuse ? m : 2 * m;
  counters_.fresh_buffers += reuse ? 1 : 2;

  SortedEntry* large_base = reuse ? parent.entries_.data() : fresh_large.data();
  std::uint32_t* large_w = reuse ? parent.weights_.data() : large_weights.data();

  // In-place compaction is safe: the write cursor never passes the read cursor.
  for (std::uint32_t p = 0; p < length; ++p) {
    const bool small_side = goes_left(p) == left_is_fresh;
    (small_side ? small_weights.data() : large_w)[new_position_[p]] = weights[p];
  }
  for (std::size_t f = 0; f < m; ++f) {
    const SortedEntry* src = parent.entries_.data() + f * length;
    SortedEntry* small_dst = fresh_small.data() + f * num_small;
    SortedEntry* large_dst = large_base + f * num_large;
    for (std::size_t i = 0; i < length; ++i) {
      const SortedEntry e = src[i];
      const std::uint32_t p = e.index();
      const SortedEntry moved{e.value, SortedEntry::pack(new_position_[p], e.label())};
      if (goes_left(p) == left_is_fresh) {
        *small_dst++ = moved;
      } else {
        *large_dst++ = moved;
      }
    }
  }

  if (reuse) {
    fresh_large = std::move(parent.entries_);
    fresh_large.resize(num_large * m);
    large_weights = std::move(parent.weights_);
    large_weights.resize(num_large);
  }
  parent = PackedNodeMatrix();

  PackedNodeMatrix small(num_small, m, std::move(fresh_small), std::move(small_weights));
  PackedNodeMatrix large(num_large, m, std::move(fresh_large), std::move(large_weights));
  if (left_is_fresh) return {std::move(small), std::move(large)};
  return {std::move(large), std::move(small)};
}

void DfsBuilder::build(PackedNodeMatrix matrix, std::size_t depth, std::int32_t node,
                       DepthFeatureSubsets& features, NodeArena& arena) {
  struct Frame {
    PackedNodeMatrix matrix;
    std::size_t depth;
    std::int32_t node;
  };
  std::vector<Frame> stack;
  stack.push_back({std::move(matrix), depth, node});
  while (!stack.empty()) {
    Frame frame = std::move(stack.back());
    stack.pop_back();
    if (check_every_node_) frame.matrix.check_invariants();
    const ClassCounts counts = frame.matrix.counts();
    if (limits_.stops(counts, frame.depth)) {
      arena.set_leaf(frame.node, counts);
      continue;
    }
    const SplitDecision split = best_split(frame.matrix, features.at(frame.depth));
    if (!split) {
      arena.set_leaf(frame.node, counts);
      continue;
    }
    const auto [left_id, right_id] = arena.set_split(frame.node, split->feature, split->threshold);
    auto [left, right] = partition(std::move(frame.matrix), *split);
    stack.push_back({std::move(right), frame.depth + 1, right_id});
    stack.push_back({std::move(left), frame.depth + 1, left_id});
  }
}

}  // namespace hybridrf

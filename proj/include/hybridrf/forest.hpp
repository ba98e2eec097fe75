#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "hybridrf/dataset.hpp"
#include "hybridrf/splitting.hpp"
#include "hybridrf/tree.hpp"

namespace hybridrf {

enum class TrainMode { bfs, dfs, hybrid_threshold, hybrid_auto };

std::string_view to_string(TrainMode mode);
// Accepts bfs, dfs, hybrid-threshold, hybrid-auto. Throws ConfigError.
TrainMode parse_mode(std::string_view name);

inline constexpr std::uint64_t kDefaultCacheBytes = std::uint64_t{32} << 20;

struct TrainConfig {
  std::size_t num_trees = 10;
  std::optional<std::size_t> max_depth;     // nullopt = unbounded
  std::optional<std::size_t> max_features;  // nullopt = floor(sqrt(m))
  Metric metric = Metric::gini;
  TrainMode mode = TrainMode::hybrid_auto;
  std::optional<double> threshold_fraction;  // required by hybrid-threshold
  std::uint64_t cache_bytes = kDefaultCacheBytes;
  std::size_t num_threads = 1;
  std::uint64_t seed = 0;
  std::uint64_t min_leaf_weight = 1;
  std::size_t prefetch_distance = 16;
  // false replaces the bootstrap with every example at weight 1 (debugging).
  bool bootstrap = true;
  // Re-validates every packed matrix produced during depth-first growth.
  bool check_invariants = false;

  // Throws ConfigError describing the first violated constraint.
  void validate(std::size_t num_features) const;
  std::size_t resolved_max_features(std::size_t num_features) const;
};

// Everything that shapes the trained model (as opposed to how it is
// computed). Echoed into the model document.
struct ModelParams {
  std::size_t num_trees = 0;
  std::optional<std::size_t> max_depth;
  std::size_t max_features = 0;
  std::uint64_t min_leaf_weight = 1;
  std::uint64_t seed = 0;
  bool bootstrap = true;

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

struct ForestModel {
  static constexpr int kFormatVersion = 1;

  std::vector<TreeModel> trees;
  std::size_t num_features = 0;
  Metric metric = Metric::gini;
  ModelParams params;

  friend bool operator==(const ForestModel&, const ForestModel&) = default;
};

// Sizes of a candidate node for the BFS->DFS switch decision.
struct NodeSize {
  std::uint64_t distinct = 0;  // distinct active examples
  std::uint64_t weighted = 0;  // bootstrap-weighted example count
};

// hybrid-threshold: weighted / N < threshold_fraction.
// hybrid-auto: distinct * m * sizeof(SortedEntry) <= cache_bytes / num_threads.
// bfs never switches, dfs always does.
bool should_switch(NodeSize node, std::size_t num_features, std::size_t num_examples,
                   const TrainConfig& config);

struct TreeStats {
  double bfs_seconds = 0.0;
  double dfs_seconds = 0.0;
  std::size_t bfs_levels = 0;
  // switch_depths[d] = nodes handed to depth-first growth at depth d.
  std::vector<std::uint64_t> switch_depths;
};

struct TrainStats {
  double sort_seconds = 0.0;   // wall clock
  double train_seconds = 0.0;  // wall clock of tree growth, sort excluded
  // Per-tree phase times summed, divided by the number of workers.
  double bfs_seconds = 0.0;
  double dfs_seconds = 0.0;
  std::size_t workers = 0;
  std::vector<std::uint64_t> switch_depths;  // summed over trees
};

// Grows one tree of the forest (tree_index selects its RNG stream).
TreeModel train_tree(const Dataset& data, const SortedMatrix& matrix, const TrainConfig& config,
                     std::size_t tree_index, TreeStats* stats = nullptr);

ForestModel train(const Dataset& data, const SortedMatrix& matrix, const TrainConfig& config,
                  TrainStats* stats = nullptr);
// Builds the sorted matrix first (timed as sort_seconds).
ForestModel train(const Dataset& data, const TrainConfig& config, TrainStats* stats = nullptr);

struct Prediction {
  std::uint32_t label = 0;
  double score = 0.0;  // fraction of trees voting for class 1
};

// Majority vote, ties to class 0. Throws std::invalid_argument on a length
// mismatch.
Prediction predict(const ForestModel& model, std::span<const float> example);

// Throws std::invalid_argument on an empty set or feature-count mismatch.
double evaluate_accuracy(const ForestModel& model, const Dataset& test);

}  // namespace hybridrf

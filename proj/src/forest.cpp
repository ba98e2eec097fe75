#include "hybridrf/forest.hpp"

#include <atomic>
#include <bit>
#include <chrono>
#include <exception>
#include <mutex>
#include <string>
#include <thread>

#include "hybridrf/bfs_builder.hpp"
#include "hybridrf/dfs_builder.hpp"
#include "hybridrf/error.hpp"
#include "hybridrf/sampling.hpp"

namespace hybridrf {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

void count_switch(TreeStats* stats, std::size_t depth) {
  if (!stats) return;
  if (stats->switch_depths.size() <= depth) stats->switch_depths.resize(depth + 1);
  ++stats->switch_depths[depth];
}

}  // namespace

std::string_view to_string(TrainMode mode) {
  switch (mode) {
    case TrainMode::bfs:
      return "bfs";
    case TrainMode::dfs:
      return "dfs";
    case TrainMode::hybrid_threshold:
      return "hybrid-threshold";
    case TrainMode::hybrid_auto:
      return "hybrid-auto";
  }
  return "?";
}

TrainMode parse_mode(std::string_view name) {
  for (const TrainMode mode :
       {TrainMode::bfs, TrainMode::dfs, TrainMode::hybrid_threshold, TrainMode::hybrid_auto}) {
    if (name == to_string(mode)) return mode;
  }
  throw ConfigError("unknown mode '" + std::string(name) +
                    "' (expected bfs|dfs|hybrid-threshold|hybrid-auto)");
}

void TrainConfig::validate(std::size_t num_features) const {
  if (num_trees < 1) throw ConfigError("number of trees must be >= 1");
  if (max_depth && *max_depth < 1) throw ConfigError("max depth must be >= 1");
  if (max_features && (*max_features < 1 || *max_features > num_features)) {
    throw ConfigError("max features must be in [1, " + std::to_string(num_features) + "]");
  }
  if (mode == TrainMode::hybrid_threshold && !threshold_fraction) {
    throw ConfigError("mode hybrid-threshold requires a threshold");
  }
  if (threshold_fraction && !(*threshold_fraction > 0.0 && *threshold_fraction <= 1.0)) {
    throw ConfigError("threshold must lie in (0, 1]");
  }
  if (cache_bytes < 1) throw ConfigError("cache bytes must be >= 1");
  if (num_threads < 1) throw ConfigError("threads must be >= 1");
  if (min_leaf_weight < 1) throw ConfigError("min leaf weight must be >= 1");
  if (prefetch_distance > 1024) throw ConfigError("prefetch distance must be <= 1024");
}

std::size_t TrainConfig::resolved_max_features(std::size_t num_features) const {
  return max_features.value_or(default_max_features(num_features));
}

bool should_switch(NodeSize node, std::size_t num_features, std::size_t num_examples,
                   const TrainConfig& config) {
  switch (config.mode) {
    case TrainMode::bfs:
      return false;
    case TrainMode::dfs:
      return true;
    case TrainMode::hybrid_threshold:
      return static_cast<double>(node.weighted) / static_cast<double>(num_examples) <
             config.threshold_fraction.value_or(0.0);
    case TrainMode::hybrid_auto: {
      using wide = unsigned __int128;
      const wide footprint = wide{node.distinct} * num_features * sizeof(SortedEntry);
      return footprint <= config.cache_bytes / config.num_threads;
    }
  }
  return false;
}

TreeModel train_tree(const Dataset& data, const SortedMatrix& matrix, const TrainConfig& config,
                     std::size_t tree_index, TreeStats* stats) {
  const std::size_t n = data.num_examples();
  const std::size_t m = data.num_features();
  RngStream rng(config.seed, tree_index);
  const BootstrapSample sample = config.bootstrap ? draw_bootstrap(rng, n) : identity_sample(n);
  const GrowthLimits limits{config.max_depth, config.resolved_max_features(m),
                            config.min_leaf_weight, config.metric};

  NodeArena arena;
  const std::int32_t root = arena.create();
  ExampleToNodeMap map(sample);
  ClassCounts root_counts;
  for (const std::uint32_t example : map.active()) {
    root_counts.add(data.label(example), map.weight(example));
  }
  const std::uint64_t root_distinct = map.active().size();
  DepthFeatureSubsets features(rng, m, limits.max_features);
  DfsBuilder dfs(limits, PartitionStrategy::reuse_parent, config.check_invariants);

  if (limits.stops(root_counts, 0)) {
    arena.set_leaf(root, root_counts);
    return std::move(arena).finish();
  }
  if (should_switch({root_distinct, root_counts.total()}, m, n, config)) {
    const auto start = Clock::now();
    count_switch(stats, 0);
    const std::int32_t codes[] = {0};
    auto packed = extract_packed(matrix, map, map.active(), codes);
    dfs.build(std::move(packed.front()), 0, root, features, arena);
    if (stats) stats->dfs_seconds += seconds_since(start);
    return std::move(arena).finish();
  }

  auto fate = [&](const ChildInfo& child) {
    if (limits.stops(child.counts, child.depth)) return ChildFate::leaf;
    if (should_switch({child.distinct, child.counts.total()}, m, n, config)) {
      return ChildFate::deferred;
    }
    return ChildFate::frontier;
  };

  // Once the frontier holds at most half of the entries per column, levels
  // scan a filtered copy of the columns instead of the full shared matrix.
  const SortedMatrix* columns = &matrix;
  SortedMatrix compacted;
  std::vector<std::uint8_t> keep;

  FrontierLevel level{0, {{root, root_counts, root_distinct}}, {}};
  while (!level.nodes.empty()) {
    auto start = Clock::now();
    if (2 * map.active().size() <= columns->num_examples()) {
      keep.assign(n, 0);
      for (const std::uint32_t example : map.active()) keep[example] = 1;
      compacted = columns->filter(keep);
      columns = &compacted;
    }
    level.feature_subset = features.at(level.depth);
    const auto decisions = bfs_level_step(*columns, map, level, config.metric,
                                          config.min_leaf_weight, config.prefetch_distance);
    LevelOutcome outcome = bfs_partition(map, level, decisions, data, arena, fate);
    if (stats) {
      stats->bfs_seconds += seconds_since(start);
      ++stats->bfs_levels;
    }

    if (!outcome.deferred.empty()) {
      start = Clock::now();
      std::vector<std::int32_t> codes(outcome.deferred.size());
      for (std::size_t g = 0; g < codes.size(); ++g) {
        codes[g] = ExampleToNodeMap::deferred_code(g);
        count_switch(stats, outcome.next.depth);
      }
      const std::size_t count = outcome.deferred_examples.size();
      auto packed = count * std::bit_width(count) < columns->num_examples()
                        ? gather_packed(data, map, outcome.deferred_examples, codes)
                        : extract_packed(*columns, map, outcome.deferred_examples, codes);
      for (const std::uint32_t example : outcome.deferred_examples) {
        map.assign(example, ExampleToNodeMap::kTerminal);
      }
      for (std::size_t g = 0; g < packed.size(); ++g) {
        dfs.build(std::move(packed[g]), outcome.next.depth, outcome.deferred[g].tree_node,
                  features, arena);
      }
      if (stats) stats->dfs_seconds += seconds_since(start);
    }
    level = std::move(outcome.next);
  }
  return std::move(arena).finish();
}

ForestModel train(const Dataset& data, const SortedMatrix& matrix, const TrainConfig& config,
                  TrainStats* stats) {
  const std::size_t m = data.num_features();
  config.validate(m);
  if (matrix.num_examples() != data.num_examples() || matrix.num_features() != m) {
    throw InvariantError("sorted matrix does not belong to the dataset");
  }

  ForestModel model;
  model.num_features = m;
  model.metric = config.metric;
  model.params = {config.num_trees, config.max_depth, config.resolved_max_features(m),
                  config.min_leaf_weight, config.seed, config.bootstrap};
  model.trees.resize(config.num_trees);
  std::vector<TreeStats> tree_stats(config.num_trees);

  const std::size_t workers = std::min(config.num_threads, config.num_trees);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    for (;;) {
      const std::size_t t = next.fetch_add(1);
      if (t >= config.num_trees) return;
      try {
        model.trees[t] = train_tree(data, matrix, config, t, &tree_stats[t]);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(config.num_trees);
        return;
      }
    }
  };

  const auto start = Clock::now();
  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> threads;
    threads.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) threads.emplace_back(work);
  }
  const double elapsed = seconds_since(start);
  if (failure) std::rethrow_exception(failure);

  if (stats) {
    stats->train_seconds = elapsed;
    stats->workers = workers;
    stats->bfs_seconds = 0.0;
    stats->dfs_seconds = 0.0;
    stats->switch_depths.clear();
    for (const TreeStats& ts : tree_stats) {
      stats->bfs_seconds += ts.bfs_seconds / static_cast<double>(workers);
      stats->dfs_seconds += ts.dfs_seconds / static_cast<double>(workers);
      if (stats->switch_depths.size() < ts.switch_depths.size()) {
        stats->switch_depths.resize(ts.switch_depths.size());
      }
      for (std::size_t d = 0; d < ts.switch_depths.size(); ++d) {
        stats->switch_depths[d] += ts.switch_depths[d];
      }
    }
  }
  return model;
}

ForestModel train(const Dataset& data, const TrainConfig& config, TrainStats* stats) {
  config.validate(data.num_features());
  const auto start = Clock::now();
  const SortedMatrix matrix = SortedMatrix::build(data, config.num_threads);
  const double sort_seconds = seconds_since(start);
  ForestModel model = train(data, matrix, config, stats);
  if (stats) stats->sort_seconds = sort_seconds;
  return model;
}

Prediction predict(const ForestModel& model, std::span<const float> example) {
  if (example.size() != model.num_features) {
    throw std::invalid_argument("example has " + std::to_string(example.size()) +
                                " features, model expects " + std::to_string(model.num_features));
  }
  if (model.trees.empty()) throw std::invalid_argument("model has no trees");
  std::size_t votes = 0;
  for (const TreeModel& tree : model.trees) votes += tree.predict(example);
  const std::size_t trees = model.trees.size();
  return {2 * votes > trees ? 1u : 0u, static_cast<double>(votes) / static_cast<double>(trees)};
}

double evaluate_accuracy(const ForestModel& model, const Dataset& test) {
  if (test.num_examples() == 0) throw std::invalid_argument("empty test set");
  if (test.num_features() != model.num_features) {
    throw std::invalid_argument("test set has " + std::to_string(test.num_features()) +
                                " features, model expects " + std::to_string(model.num_features));
  }
  std::size_t correct = 0;
  std::vector<float> row(test.num_features());
  for (std::size_t i = 0; i < test.num_examples(); ++i) {
    for (std::size_t f = 0; f < row.size(); ++f) row[f] = test.value(i, f);
    correct += predict(model, row).label == test.label(i);
  }
  return static_cast<double>(correct) / static_cast<double>(test.num_examples());
}

}  // namespace hybridrf

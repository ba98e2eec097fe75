// Acceptance suite: one line per criterion, nonzero exit when a gating
// criterion fails. Pass criterion numbers as arguments to run a subset.

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "hybridrf/analysis.hpp"
#include "hybridrf/bfs_builder.hpp"
#include "hybridrf/dfs_builder.hpp"
#include "hybridrf/forest.hpp"
#include "hybridrf/serialize.hpp"
#include "oracles/brute_split.hpp"
#include "oracles/coverage_mc.hpp"
#include "oracles/reference_builder.hpp"
#include "test_util.hpp"

using namespace hybridrf;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  std::string name;
  double limit_seconds;
  bool gating;
  std::function<Outcome()> run;
};

std::string fmt(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::size_t hardware_threads() {
  return std::max<unsigned>(1, std::thread::hardware_concurrency());
}

std::vector<std::uint32_t> all_features(std::size_t m) {
  std::vector<std::uint32_t> f(m);
  std::iota(f.begin(), f.end(), 0u);
  return f;
}

// Random dataset with N and m drawn up to the given bounds.
Dataset random_small(std::mt19937_64& gen, std::size_t max_n, std::size_t max_m) {
  const std::size_t n = 2 + gen() % (max_n - 1);
  const std::size_t m = 1 + gen() % max_m;
  return testutil::random_dataset(gen, n, m, 2 + static_cast<int>(gen() % 30));
}

Outcome split_oracle() {
  std::mt19937_64 gen(1);
  std::size_t compared = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const Dataset data = random_small(gen, 64, 8);
    const std::size_t n = data.num_examples();
    const std::size_t m = data.num_features();
    std::vector<std::uint64_t> weights(n);
    for (auto& w : weights) w = gen() % 4;
    const Metric metric = trial % 2 ? Metric::entropy : Metric::gini;

    std::vector<std::vector<oracle::Row>> rows(m);
    std::vector<SplitDecision> per_feature;
    for (std::uint32_t f = 0; f < m; ++f) {
      std::vector<std::size_t> order(n);
      std::iota(order.begin(), order.end(), std::size_t{0});
      std::stable_sort(order.begin(), order.end(),
                       [&](auto a, auto b) { return data.value(a, f) < data.value(b, f); });
      std::vector<ColumnEntry> column;
      for (auto i : order) column.push_back({data.value(i, f), data.label(i), weights[i]});
      for (std::size_t i = 0; i < n; ++i) rows[f].push_back({data.value(i, f), data.label(i), weights[i]});
      per_feature.push_back(best_split_in_column(column, metric, 1, f));
    }
    const SplitDecision actual = best_split_across_features(per_feature);
    const auto expected = oracle::brute_force_node(rows, metric, 1);
    if (actual.has_value() != expected.has_value()) {
      return {false, "trial " + std::to_string(trial) + ": split presence differs"};
    }
    if (!expected) continue;
    ++compared;
    if (actual->feature != expected->feature || actual->threshold != expected->threshold ||
        std::abs(actual->gain - expected->gain) > 1e-9) {
      return {false, "trial " + std::to_string(trial) + ": feature/threshold/gain differ"};
    }
  }
  return {true, "500 datasets, " + std::to_string(compared) + " with a split, all agree"};
}

Outcome cross_mode() {
  std::mt19937_64 gen(2);
  std::size_t mid_tree_switches = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const Dataset data = random_small(gen, 512, 10);
    const std::size_t m = data.num_features();
    TrainConfig c;
    c.num_trees = 3;
    c.max_features = m;
    c.seed = trial;
    c.mode = TrainMode::bfs;
    const SortedMatrix matrix = SortedMatrix::build(data);
    const std::string reference = serialize(train(data, matrix, c));

    c.mode = TrainMode::dfs;
    if (serialize(train(data, matrix, c)) != reference) {
      return {false, "trial " + std::to_string(trial) + ": dfs differs from bfs"};
    }
    c.mode = TrainMode::hybrid_threshold;
    c.threshold_fraction = 0.25;
    TrainStats stats;
    if (serialize(train(data, matrix, c, &stats)) != reference) {
      return {false, "trial " + std::to_string(trial) + ": hybrid-threshold differs from bfs"};
    }
    c.mode = TrainMode::hybrid_auto;
    c.threshold_fraction.reset();
    // A budget of about a quarter of the root footprint forces a switch below the root.
    c.cache_bytes = std::max<std::uint64_t>(1, data.num_examples() * m * sizeof(SortedEntry) / 4);
    if (serialize(train(data, matrix, c, &stats)) != reference) {
      return {false, "trial " + std::to_string(trial) + ": hybrid-auto differs from bfs"};
    }
    for (std::size_t d = 1; d < stats.switch_depths.size(); ++d) {
      mid_tree_switches += stats.switch_depths[d];
    }
  }
  return {mid_tree_switches > 0,
          "50 datasets x 4 modes identical; " + std::to_string(mid_tree_switches) +
              " hybrid-auto switches below the root"};
}

Outcome reference_builder() {
  std::mt19937_64 gen(3);
  const TrainMode modes[] = {TrainMode::bfs, TrainMode::dfs, TrainMode::hybrid_threshold,
                             TrainMode::hybrid_auto};
  std::size_t nodes = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const Dataset data = random_small(gen, 300, 6);
    TrainConfig c;
    c.num_trees = 2;
    c.max_features = data.num_features();
    c.seed = 100 + trial;
    c.mode = modes[trial % 4];
    c.threshold_fraction = 0.3;
    c.cache_bytes = 2048;
    c.metric = trial % 3 == 0 ? Metric::entropy : Metric::gini;
    if (trial % 5 == 0) c.max_depth = 3;
    if (trial % 7 == 0) c.min_leaf_weight = 2;
    const ForestModel model = train(data, c);
    for (std::size_t t = 0; t < c.num_trees; ++t) {
      RngStream rng(c.seed, t);
      const BootstrapSample sample = draw_bootstrap(rng, data.num_examples());
      oracle::ReferenceBuilder builder(
          data, sample.multiplicity,
          {c.max_depth, data.num_features(), c.min_leaf_weight, c.metric});
      const TreeModel expected(builder.build());
      if (!(expected == model.trees[t])) {
        return {false, "trial " + std::to_string(trial) + " tree " + std::to_string(t) + " differs"};
      }
      nodes += expected.size();
    }
  }
  return {true, "20 datasets, 40 trees, " + std::to_string(nodes) + " nodes identical"};
}

Outcome determinism() {
  const Dataset data = generate_synthetic(100000, 20, 7);
  const SortedMatrix matrix = SortedMatrix::build(data, hardware_threads());
  TrainConfig c;
  c.num_trees = 16;
  c.mode = TrainMode::hybrid_auto;
  c.seed = 7;
  std::string first;
  for (std::size_t threads : {1u, 2u, 8u}) {
    c.num_threads = threads;
    const std::string text = serialize(train(data, matrix, c));
    if (first.empty()) {
      first = text;
    } else if (text != first) {
      return {false, "threads=" + std::to_string(threads) + " differs from threads=1"};
    }
  }
  return {true, "threads 1/2/8 byte-identical (" + std::to_string(first.size()) + " bytes)"};
}

Outcome coverage() {
  const double depth_five = coverage_probability({30, 5, 31});
  if (depth_five < 0.898 || depth_five > 0.900) return {false, "P(30,5,31) = " + fmt(depth_five, 6)};
  struct Point {
    std::size_t m, k;
    std::uint64_t n;
  };
  const Point grid[] = {{10, 3, 4}, {10, 3, 8},  {10, 5, 3}, {8, 2, 6},  {12, 4, 6},
                        {6, 2, 4},  {6, 3, 3},   {12, 3, 10}, {9, 4, 4}, {5, 1, 8}};
  double worst = 0.0;
  for (std::size_t i = 0; i < std::size(grid); ++i) {
    const auto& p = grid[i];
    const double exact = coverage_probability({p.m, p.k, p.n});
    const auto mc = oracle::coverage_monte_carlo(p.m, p.k, p.n, 1000000, 1000 + i);
    const double z = std::abs(exact - mc.probability) / std::max(mc.standard_error, 1e-12);
    worst = std::max(worst, z);
    if (z > 3.0) {
      return {false, "(" + std::to_string(p.m) + "," + std::to_string(p.k) + "," +
                         std::to_string(p.n) + "): exact " + fmt(exact, 6) + " vs MC " +
                         fmt(mc.probability, 6)};
    }
  }
  return {true, "P(30,5,31) = " + fmt(depth_five, 6) + "; 10-point MC grid, max |z| = " + fmt(worst, 2)};
}

Outcome bootstrap() {
  double lo = 1.0;
  double hi = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    RngStream rng(seed, 0);
    const auto s = draw_bootstrap(rng, 100000);
    const double f = static_cast<double>(s.num_distinct()) / 100000.0;
    lo = std::min(lo, f);
    hi = std::max(hi, f);
  }
  return {lo >= 0.62 && hi <= 0.645, "unique fraction in [" + fmt(lo) + ", " + fmt(hi) + "]"};
}

Outcome allocation_halving() {
  const Dataset data = generate_synthetic(4096, 8, 11);
  const SortedMatrix matrix = SortedMatrix::build(data);
  RngStream boot_rng(11, 0);
  const ExampleToNodeMap map(draw_bootstrap(boot_rng, 4096));
  const GrowthLimits limits{std::nullopt, default_max_features(8), 1, Metric::gini};

  auto grow = [&](PartitionStrategy strategy, DfsCounters& counters) {
    NodeArena arena;
    const auto root = arena.create();
    DfsBuilder builder(limits, strategy);
    RngStream rng(11, 1);
    DepthFeatureSubsets features(rng, 8, limits.max_features);
    builder.build(extract_packed(matrix, map, 0), 0, root, features, arena);
    counters = builder.counters();
    return std::move(arena).finish();
  };
  DfsCounters reuse;
  DfsCounters naive;
  const TreeModel a = grow(PartitionStrategy::reuse_parent, reuse);
  const TreeModel b = grow(PartitionStrategy::copy_both, naive);
  if (!(a == b)) return {false, "reuse and copy-both trees differ"};
  const bool per_split = reuse.fresh_columns <= reuse.splits * 8;
  const bool halved = reuse.fresh_columns <= naive.fresh_columns / 2 + 8;
  return {per_split && halved && reuse.splits > 0,
          std::to_string(reuse.splits) + " splits: " + std::to_string(reuse.fresh_columns) +
              " fresh columns vs " + std::to_string(naive.fresh_columns) + " naive"};
}

// Forwards to a SortedMatrix while logging every (feature, position) read.
struct LoggingMatrix {
  const SortedMatrix& inner;
  mutable std::vector<std::pair<std::uint32_t, std::uint32_t>> log;

  std::size_t num_examples() const { return inner.num_examples(); }
  const SortedEntry& at(std::size_t f, std::size_t i) const {
    log.emplace_back(static_cast<std::uint32_t>(f), static_cast<std::uint32_t>(i));
    return inner.at(f, i);
  }
};

Outcome bfs_access_pattern() {
  const Dataset data = generate_synthetic(20000, 16, 12);
  const SortedMatrix sorted = SortedMatrix::build(data);
  RngStream rng(12, 0);
  const BootstrapSample sample = draw_bootstrap(rng, data.num_examples());
  ExampleToNodeMap map(sample);
  NodeArena arena;
  const auto root = arena.create();
  ClassCounts counts;
  for (auto e : map.active()) counts.add(data.label(e), map.weight(e));
  const GrowthLimits limits{std::nullopt, 4, 1, Metric::gini};
  FrontierLevel level{0, {{root, counts, map.active().size()}}, {}};
  std::size_t levels = 0;
  std::size_t reads = 0;
  while (!level.nodes.empty() && levels < 8) {
    level.feature_subset = sample_features(rng, 16, 4);
    LoggingMatrix logging{sorted, {}};
    const std::size_t prefetch = levels % 3 == 0 ? 16 : (levels % 3 == 1 ? 0 : 5);
    const auto decisions = bfs_level_step(logging, map, level, Metric::gini, 1, prefetch);
    std::vector<std::pair<std::uint32_t, std::uint32_t>> expected;
    for (auto f : level.feature_subset) {
      for (std::uint32_t i = 0; i < sorted.num_examples(); ++i) expected.emplace_back(f, i);
    }
    if (logging.log != expected) {
      return {false, "level " + std::to_string(levels) + ": reads are not one ordered pass"};
    }
    reads += logging.log.size();
    auto outcome = bfs_partition(map, level, decisions, data, arena, [&](const ChildInfo& c) {
      return limits.stops(c.counts, c.depth) ? ChildFate::leaf : ChildFate::frontier;
    });
    level = std::move(outcome.next);
    ++levels;
  }
  return {levels > 1, std::to_string(levels) + " levels, " + std::to_string(reads) +
                          " reads, each selected entry once in ascending order"};
}

Outcome accuracy_parity() {
  const TrainMode modes[] = {TrainMode::bfs, TrainMode::dfs, TrainMode::hybrid_threshold,
                             TrainMode::hybrid_auto};
  std::ostringstream detail;
  bool pass = true;
  double worst_accuracy = 1.0;
  double worst_spread = 0.0;
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const Dataset all = generate_synthetic(200000, 18, seed);
    const Dataset train_set = all.slice(0, 150000);
    const Dataset test_set = all.slice(150000, 200000);
    const SortedMatrix matrix = SortedMatrix::build(train_set, hardware_threads());
    double lo = 1.0;
    double hi = 0.0;
    for (TrainMode mode : modes) {
      TrainConfig c;
      c.num_trees = 100;
      c.max_depth = 20;
      c.mode = mode;
      c.threshold_fraction = mode == TrainMode::hybrid_threshold ? std::optional(0.01) : std::nullopt;
      c.num_threads = hardware_threads();
      c.seed = seed;
      const double accuracy = evaluate_accuracy(train(train_set, matrix, c), test_set);
      lo = std::min(lo, accuracy);
      hi = std::max(hi, accuracy);
    }
    worst_accuracy = std::min(worst_accuracy, lo);
    worst_spread = std::max(worst_spread, hi - lo);
    pass = pass && lo >= 0.95 && hi - lo <= 0.005;
    detail << "seed " << seed << " [" << fmt(lo) << ", " << fmt(hi) << "]; ";
  }
  detail << "min accuracy " << fmt(worst_accuracy) << ", max spread " << fmt(worst_spread);
  return {pass, detail.str()};
}

Outcome hybrid_performance() {
  const Dataset data = generate_synthetic(1000000, 20, 10);
  const SortedMatrix matrix = SortedMatrix::build(data, hardware_threads());
  double seconds[3] = {};
  const TrainMode modes[] = {TrainMode::bfs, TrainMode::dfs, TrainMode::hybrid_auto};
  for (int i = 0; i < 3; ++i) {
    TrainConfig c;
    c.num_trees = 10;
    c.mode = modes[i];
    c.num_threads = hardware_threads();
    c.seed = 10;
    TrainStats stats;
    train(data, matrix, c, &stats);
    seconds[i] = stats.train_seconds;
  }
  const double best_fixed = std::min(seconds[0], seconds[1]);
  const double ratio = seconds[2] / best_fixed;
  return {ratio <= 1.25, "bfs " + fmt(seconds[0], 2) + " s, dfs " + fmt(seconds[1], 2) +
                             " s, hybrid-auto " + fmt(seconds[2], 2) + " s (ratio " +
                             fmt(ratio, 3) + ", threads " + std::to_string(hardware_threads()) + ")"};
}

Outcome round_trip() {
  std::mt19937_64 gen(13);
  const TrainMode modes[] = {TrainMode::bfs, TrainMode::dfs, TrainMode::hybrid_threshold,
                             TrainMode::hybrid_auto};
  std::size_t nodes = 0;
  for (int i = 0; i < 200; ++i) {
    const Dataset data = i % 2 ? random_small(gen, 400, 8)
                               : generate_synthetic(50 + gen() % 400, 1 + gen() % 8, gen());
    TrainConfig c;
    c.num_trees = 1 + gen() % 4;
    c.mode = modes[i % 4];
    c.threshold_fraction = 0.2;
    c.cache_bytes = 1 + gen() % 20000;
    c.seed = gen();
    c.metric = gen() % 2 ? Metric::entropy : Metric::gini;
    if (gen() % 2) c.max_depth = 1 + gen() % 12;
    c.min_leaf_weight = 1 + gen() % 3;
    c.bootstrap = gen() % 5 != 0;
    const ForestModel model = train(data, c);
    const ForestModel back = deserialize(serialize(model));
    if (!(back == model)) return {false, "model " + std::to_string(i) + " changed in round trip"};
    for (std::size_t t = 0; t < model.trees.size(); ++t) {
      const auto a = model.trees[t].nodes();
      const auto b = back.trees[t].nodes();
      for (std::size_t k = 0; k < a.size(); ++k) {
        if (std::bit_cast<std::uint32_t>(a[k].threshold) !=
            std::bit_cast<std::uint32_t>(b[k].threshold)) {
          return {false, "threshold bits changed in model " + std::to_string(i)};
        }
      }
      nodes += a.size();
    }
  }
  return {true, "200 models, " + std::to_string(nodes) + " nodes bit-exact"};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria{
      {1, "split search matches brute-force oracle", 10, true, split_oracle},
      {2, "all modes build identical forests", 60, true, cross_mode},
      {3, "trees match naive recursive builder", 60, true, reference_builder},
      {4, "model independent of thread count", 120, true, determinism},
      {5, "feature coverage probability", 30, true, coverage},
      {6, "bootstrap unique fraction", 10, true, bootstrap},
      {7, "parent-buffer reuse halves allocations", 30, true, allocation_halving},
      {8, "BFS reads each selected column once in order", 10, true, bfs_access_pattern},
      {9, "accuracy and cross-mode parity at desk scale", 600, true, accuracy_parity},
      {10, "hybrid-auto tracks the faster fixed mode", 900, false, hybrid_performance},
      {11, "model serialization round trip", 30, true, round_trip},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::stoi(argv[i]));

  int failures = 0;
  for (const auto& c : criteria) {
    if (!selected.empty() && !selected.contains(c.id)) continue;
    const auto start = Clock::now();
    Outcome outcome;
    try {
      outcome = c.run();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    const double seconds = std::chrono::duration<double>(Clock::now() - start).count();
    if (seconds > c.limit_seconds) {
      outcome.pass = false;
      outcome.detail += "; over the " + fmt(c.limit_seconds, 0) + " s limit";
    }
    const char* tag = outcome.pass ? "PASS" : (c.gating ? "FAIL" : "WARN");
    std::cout << "[" << tag << "] " << c.id << ". " << c.name << " (" << fmt(seconds, 2)
              << " s): " << outcome.detail << std::endl;
    if (!outcome.pass && c.gating) ++failures;
  }
  std::cout << (failures == 0 ? "acceptance: all gating criteria passed"
                              : "acceptance: " + std::to_string(failures) + " gating criteria failed")
            << std::endl;
  return failures == 0 ? 0 : 1;
}

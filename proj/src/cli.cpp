#include "hybridrf/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "hybridrf/analysis.hpp"
#include "hybridrf/dataset.hpp"
#include "hybridrf/error.hpp"
#include "hybridrf/forest.hpp"
#include "hybridrf/serialize.hpp"

namespace hybridrf::cli {
namespace {

using Json = nlohmann::ordered_json;
using Clock = std::chrono::steady_clock;

std::size_t default_threads() {
  return std::max<unsigned>(1, std::thread::hardware_concurrency());
}

template <class T>
T parse_number(const std::string& text, const char* what) {
  T value{};
  std::istringstream in(text);
  in >> value;
  if (!in || !in.eof() || (std::is_unsigned_v<T> && text.find('-') != std::string::npos)) {
    throw ConfigError(std::string("bad value '") + text + "' for " + what);
  }
  return value;
}

// Flags shared by every command that reads a dataset.
struct DataFlags {
  std::string path;
  std::string synthetic;
  std::string format = "csv";
  std::string label_col = "last";
  bool header = false;
  std::optional<std::uint64_t> data_seed;

  void add_to(CLI::App& app) {
    auto* data = app.add_option("--data", path, "Dataset file");
    auto* synth = app.add_option("--synthetic", synthetic, "Generate NxM two-Gaussian data");
    data->excludes(synth);
    app.add_option("--format", format, "csv|libsvm")->check(CLI::IsMember({"csv", "libsvm"}));
    app.add_option("--label-col", label_col, "Zero-based CSV label column or 'last'");
    app.add_flag("--header", header, "Skip one CSV header row");
    app.add_option("--data-seed", data_seed, "Seed of --synthetic data (default: --seed)");
  }

  std::string describe() const { return path.empty() ? "synthetic:" + synthetic : path; }

  Dataset load(std::uint64_t seed) const {
    if (!synthetic.empty()) {
      const auto x = synthetic.find_first_of("xX");
      if (x == std::string::npos) throw ConfigError("--synthetic expects NxM");
      const auto n = parse_number<std::size_t>(synthetic.substr(0, x), "--synthetic rows");
      const auto m = parse_number<std::size_t>(synthetic.substr(x + 1), "--synthetic features");
      if (n < 1 || m < 1) throw ConfigError("--synthetic needs N, M >= 1");
      return generate_synthetic(n, m, data_seed.value_or(seed));
    }
    if (path.empty()) throw ConfigError("one of --data or --synthetic is required");
    if (format == "libsvm") return load_libsvm(path);
    CsvOptions options;
    options.skip_header = header;
    if (label_col != "last") options.label_column = parse_number<std::size_t>(label_col, "--label-col");
    return load_csv(path, options);
  }
};

// Flags shaping training.
struct TrainFlags {
  std::string max_depth = "none";
  std::string max_features = "sqrt";
  std::string metric = "gini";
  std::uint64_t cache_bytes = kDefaultCacheBytes;
  std::size_t threads = default_threads();
  std::uint64_t seed = 0;
  std::uint64_t min_leaf = 1;
  std::size_t prefetch = 16;
  bool include_sort_time = false;
  bool no_bootstrap = false;

  void add_to(CLI::App& app) {
    app.add_option("--max-depth", max_depth, "Depth bound or 'none'");
    app.add_option("--max-features", max_features, "Features per split or 'sqrt'");
    app.add_option("--metric", metric, "gini|entropy");
    app.add_option("--cache-bytes", cache_bytes, "Cache budget for hybrid-auto");
    app.add_option("--threads", threads, "Tree-level worker threads");
    app.add_option("--seed", seed, "Master seed");
    app.add_option("--min-leaf", min_leaf, "Minimum weighted examples per leaf");
    app.add_option("--prefetch", prefetch, "BFS prefetch distance in entries");
    app.add_flag("--include-sort-time", include_sort_time, "Count pre-sorting in training time");
    app.add_flag("--no-bootstrap", no_bootstrap, "Weight every example once (debugging)");
  }

  TrainConfig config() const {
    TrainConfig c;
    if (max_depth != "none") c.max_depth = parse_number<std::size_t>(max_depth, "--max-depth");
    if (max_features != "sqrt") {
      c.max_features = parse_number<std::size_t>(max_features, "--max-features");
    }
    c.metric = parse_metric(metric);
    c.cache_bytes = cache_bytes;
    c.num_threads = threads;
    c.seed = seed;
    c.min_leaf_weight = min_leaf;
    c.prefetch_distance = prefetch;
    c.bootstrap = !no_bootstrap;
    return c;
  }
};

std::string fixed(double value, int digits) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << value;
  return s.str();
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << contents) || !out.flush()) throw IoError("cannot write " + path);
}

std::string config_echo(const TrainConfig& c, std::size_t num_features) {
  std::ostringstream s;
  s << "mode=" << to_string(c.mode);
  if (c.threshold_fraction) s << " threshold=" << *c.threshold_fraction;
  if (c.mode == TrainMode::hybrid_auto) s << " cache_bytes=" << c.cache_bytes;
  s << " trees=" << c.num_trees << " max_depth="
    << (c.max_depth ? std::to_string(*c.max_depth) : std::string("none"))
    << " max_features=" << c.resolved_max_features(num_features)
    << " metric=" << to_string(c.metric) << " threads=" << c.num_threads << " seed=" << c.seed
    << " min_leaf=" << c.min_leaf_weight;
  return s.str();
}

// ---------------------------------------------------------------------------
// train / predict / eval

struct TrainCommand {
  DataFlags data;
  TrainFlags train;
  std::size_t trees = 10;
  std::string mode = "hybrid-auto";
  std::optional<double> threshold;
  std::string out;

  int run(std::ostream& os) const {
    TrainConfig c = train.config();
    c.num_trees = trees;
    c.mode = parse_mode(mode);
    c.threshold_fraction = threshold;
    const Dataset dataset = data.load(train.seed);
    c.validate(dataset.num_features());

    TrainStats stats;
    const ForestModel model = hybridrf::train(dataset, c, &stats);
    write_file(out, serialize(model));
    const double seconds = stats.train_seconds + (train.include_sort_time ? stats.sort_seconds : 0.0);
    os << "trained " << c.num_trees << " trees on " << dataset.num_examples() << "x"
       << dataset.num_features() << " in " << fixed(seconds, 3) << " s"
       << (train.include_sort_time ? " (sort included: " : " (sort excluded: ")
       << fixed(stats.sort_seconds, 3) << " s) " << config_echo(c, dataset.num_features()) << "\n";
    return kOk;
  }
};

struct PredictCommand {
  DataFlags data;
  std::string model_path;
  std::string out;

  int run(std::ostream& os) const {
    const ForestModel model = deserialize(read_file(model_path));
    const Dataset dataset = data.load(0);
    if (dataset.num_features() != model.num_features) {
      throw std::invalid_argument("data has " + std::to_string(dataset.num_features()) +
                                  " features, model expects " + std::to_string(model.num_features));
    }
    std::ostringstream lines;
    for (std::size_t i = 0; i < dataset.num_examples(); ++i) {
      const Prediction p = predict(model, dataset.row(i));
      lines << p.label << "," << fixed(p.score, 6) << "\n";
    }
    if (out.empty()) {
      os << lines.str();
    } else {
      write_file(out, lines.str());
    }
    return kOk;
  }
};

struct EvalCommand {
  DataFlags data;
  std::string model_path;

  int run(std::ostream& os) const {
    const ForestModel model = deserialize(read_file(model_path));
    const Dataset dataset = data.load(0);
    os << "accuracy " << fixed(evaluate_accuracy(model, dataset), 4) << "\n";
    return kOk;
  }
};

// ---------------------------------------------------------------------------
// bench

struct BenchCommand {
  DataFlags data;
  TrainFlags train;
  std::vector<std::string> modes{"bfs", "dfs", "hybrid-auto"};
  std::vector<std::size_t> trees{10};
  std::vector<double> thresholds;
  double test_fraction = 0.25;
  double parity_band = 0.005;
  std::string report;

  int run(std::ostream& os, std::ostream& es) const {
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
      throw ConfigError("--test-fraction must lie in (0, 1)");
    }
    struct Plan {
      TrainMode mode;
      std::optional<double> threshold;
    };
    std::vector<Plan> plans;
    for (const auto& name : modes) {
      const TrainMode mode = parse_mode(name);
      if (mode == TrainMode::hybrid_threshold) {
        if (thresholds.empty()) throw ConfigError("mode hybrid-threshold requires --threshold");
        for (const double t : thresholds) plans.push_back({mode, t});
      } else {
        plans.push_back({mode, std::nullopt});
      }
    }

    const Dataset all = data.load(train.seed);
    const auto num_test = static_cast<std::size_t>(
        static_cast<double>(all.num_examples()) * test_fraction);
    if (num_test < 1 || num_test >= all.num_examples()) {
      throw ConfigError("dataset too small for the requested train/test split");
    }
    const std::size_t num_train = all.num_examples() - num_test;
    const Dataset train_set = all.slice(0, num_train);
    const Dataset test_set = all.slice(num_train, all.num_examples());

    const TrainConfig base = train.config();
    for (const auto& plan : plans) {
      TrainConfig c = base;
      c.mode = plan.mode;
      c.threshold_fraction = plan.threshold;
      for (const std::size_t t : trees) {
        c.num_trees = t;
        c.validate(train_set.num_features());
      }
    }

    const auto sort_start = Clock::now();
    const SortedMatrix matrix = SortedMatrix::build(train_set, base.num_threads);
    const double sort_seconds = std::chrono::duration<double>(Clock::now() - sort_start).count();

    Json doc;
    doc["schema"] = "hybridrf-bench/1";
    doc["dataset"] = Json{{"source", data.describe()},
                          {"train_examples", train_set.num_examples()},
                          {"test_examples", test_set.num_examples()},
                          {"num_features", train_set.num_features()}};
    doc["settings"] = Json{
        {"max_depth", base.max_depth ? Json(*base.max_depth) : Json(nullptr)},
        {"max_features", base.resolved_max_features(train_set.num_features())},
        {"metric", to_string(base.metric)},
        {"cache_bytes", base.cache_bytes},
        {"threads", base.num_threads},
        {"seed", base.seed},
        {"min_leaf", base.min_leaf_weight},
        {"include_sort_time", train.include_sort_time}};
    doc["sort_seconds"] = sort_seconds;

    os << std::left << std::setw(18) << "mode" << std::setw(11) << "threshold" << std::setw(7)
       << "trees" << std::right << std::setw(10) << "train_s" << std::setw(10) << "bfs_s"
       << std::setw(10) << "dfs_s" << std::setw(11) << "overhead_s" << std::setw(10)
       << "accuracy" << "  switch_depths\n";

    Json runs = Json::array();
    std::map<std::size_t, std::pair<double, double>> accuracy_range;  // trees -> (min, max)
    for (const std::size_t t : trees) {
      for (const auto& plan : plans) {
        TrainConfig c = base;
        c.num_trees = t;
        c.mode = plan.mode;
        c.threshold_fraction = plan.threshold;
        TrainStats stats;
        const ForestModel model = hybridrf::train(train_set, matrix, c, &stats);
        const double accuracy = evaluate_accuracy(model, test_set);

        const double sort_phase = train.include_sort_time ? sort_seconds : 0.0;
        const double total = stats.train_seconds + sort_phase;
        const double overhead = total - sort_phase - stats.bfs_seconds - stats.dfs_seconds;
        if (overhead < -1e-9) {
          throw InvariantError("phase times exceed total time for mode " +
                               std::string(to_string(plan.mode)));
        }
        std::size_t nodes = 0;
        for (const auto& tree : model.trees) nodes += tree.size();

        runs.push_back(Json{
            {"mode", to_string(plan.mode)},
            {"threshold", plan.threshold ? Json(*plan.threshold) : Json(nullptr)},
            {"cache_bytes", c.cache_bytes},
            {"trees", t},
            {"max_depth", c.max_depth ? Json(*c.max_depth) : Json(nullptr)},
            {"train_seconds", total},
            {"phases",
             Json{{"sort", sort_phase},
                  {"bfs", stats.bfs_seconds},
                  {"dfs", stats.dfs_seconds},
                  {"overhead", overhead}}},
            {"switch_depths", stats.switch_depths},
            {"nodes", nodes},
            {"accuracy", accuracy}});

        auto [it, inserted] = accuracy_range.try_emplace(t, accuracy, accuracy);
        if (!inserted) {
          it->second.first = std::min(it->second.first, accuracy);
          it->second.second = std::max(it->second.second, accuracy);
        }

        std::ostringstream depths;
        for (std::size_t d = 0; d < stats.switch_depths.size(); ++d) {
          if (stats.switch_depths[d]) depths << d << ":" << stats.switch_depths[d] << " ";
        }
        os << std::left << std::setw(18) << to_string(plan.mode) << std::setw(11)
           << (plan.threshold ? fixed(*plan.threshold, 4) : std::string("-")) << std::setw(7) << t
           << std::right << std::setw(10) << fixed(total, 3) << std::setw(10)
           << fixed(stats.bfs_seconds, 3) << std::setw(10) << fixed(stats.dfs_seconds, 3)
           << std::setw(11) << fixed(overhead, 3) << std::setw(10) << fixed(accuracy, 4) << "  "
           << depths.str() << "\n";
      }
    }
    doc["runs"] = std::move(runs);

    Json groups = Json::array();
    bool parity_ok = true;
    for (const auto& [t, range] : accuracy_range) {
      const double spread = range.second - range.first;
      const bool ok = spread <= parity_band;
      parity_ok = parity_ok && ok;
      groups.push_back(Json{{"trees", t},
                            {"min_accuracy", range.first},
                            {"max_accuracy", range.second},
                            {"spread", spread},
                            {"ok", ok}});
      if (!ok) {
        es << "warning: accuracy spread " << fixed(spread, 4) << " across modes at " << t
           << " trees exceeds band " << parity_band << "\n";
      }
    }
    doc["parity"] = Json{{"band", parity_band}, {"groups", std::move(groups)}, {"ok", parity_ok}};
    os << "accuracy parity across modes: " << (parity_ok ? "ok" : "VIOLATED") << "\n";

    if (!report.empty()) write_file(report, doc.dump(2) + "\n");
    return kOk;
  }
};

// ---------------------------------------------------------------------------
// coverage

struct CoverageCommand {
  std::size_t m = 0;
  std::size_t k = 0;
  std::optional<std::uint64_t> n;
  std::optional<std::size_t> depth;
  std::optional<double> target;

  int run(std::ostream& os) const {
    const int given = (n ? 1 : 0) + (depth ? 1 : 0) + (target ? 1 : 0);
    if (given != 1) throw ConfigError("give exactly one of --n, --depth, --target");
    if (k < 1 || k > m) throw ConfigError("need 1 <= k <= m");
    if (target) {
      if (!(*target > 0.0 && *target < 1.0)) throw ConfigError("--target must lie in (0, 1)");
      os << coverage_depth(m, k, *target) << "\n";
      return kOk;
    }
    std::uint64_t draws = 0;
    if (n) {
      draws = *n;
    } else {
      if (*depth < 1 || *depth > 63) throw ConfigError("--depth must lie in [1, 63]");
      draws = (std::uint64_t{1} << *depth) - 1;
    }
    os << fixed(coverage_probability({m, k, draws}), 6) << "\n";
    return kOk;
  }
};

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Exact random forest training with breadth-first, depth-next tree growth",
               "hybridrf"};
  app.require_subcommand(1);

  TrainCommand train_cmd;
  auto* train = app.add_subcommand("train", "Train a forest and write the model");
  train_cmd.data.add_to(*train);
  train_cmd.train.add_to(*train);
  train->add_option("--trees", train_cmd.trees, "Number of trees");
  train->add_option("--mode", train_cmd.mode, "bfs|dfs|hybrid-threshold|hybrid-auto");
  train->add_option("--threshold", train_cmd.threshold, "Active fraction for hybrid-threshold");
  train->add_option("--out", train_cmd.out, "Model output path")->required();

  PredictCommand predict_cmd;
  auto* predict = app.add_subcommand("predict", "Print label,score for every row");
  predict_cmd.data.add_to(*predict);
  predict->add_option("--model", predict_cmd.model_path, "Model file")->required();
  predict->add_option("--out", predict_cmd.out, "Write predictions here instead of stdout");

  EvalCommand eval_cmd;
  auto* eval = app.add_subcommand("eval", "Print test accuracy");
  eval_cmd.data.add_to(*eval);
  eval->add_option("--model", eval_cmd.model_path, "Model file")->required();

  BenchCommand bench_cmd;
  auto* bench = app.add_subcommand("bench", "Compare training modes over a grid of tree counts");
  bench_cmd.data.add_to(*bench);
  bench_cmd.train.add_to(*bench);
  bench->add_option("--mode,--modes", bench_cmd.modes, "Comma-separated modes")->delimiter(',');
  bench->add_option("--trees", bench_cmd.trees, "Comma-separated tree counts")->delimiter(',');
  bench->add_option("--threshold,--thresholds", bench_cmd.thresholds,
                    "Comma-separated hybrid-threshold fractions")
      ->delimiter(',');
  bench->add_option("--test-fraction", bench_cmd.test_fraction, "Held-out tail fraction");
  bench->add_option("--parity-band", bench_cmd.parity_band, "Allowed accuracy spread");
  bench->add_option("--report", bench_cmd.report, "Machine-readable JSON report path");

  CoverageCommand coverage_cmd;
  auto* coverage = app.add_subcommand("coverage", "Feature coverage probability after n splits");
  coverage->add_option("--m", coverage_cmd.m, "Total features")->required();
  coverage->add_option("--k", coverage_cmd.k, "Features sampled per node")->required();
  coverage->add_option("--n", coverage_cmd.n, "Number of nodes");
  coverage->add_option("--depth", coverage_cmd.depth, "Full binary tree depth");
  coverage->add_option("--target", coverage_cmd.target, "Report the depth reaching this probability");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*train) return train_cmd.run(out);
    if (*predict) return predict_cmd.run(out);
    if (*eval) return eval_cmd.run(out);
    if (*bench) return bench_cmd.run(out, err);
    if (*coverage) return coverage_cmd.run(out);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const DataError& e) {
    err << "error: " << e.what() << "\n";
    return kIo;
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kIo;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kInternal;
  }
  return kUsage;
}

}  // namespace hybridrf::cli

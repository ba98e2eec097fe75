#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "hybridrf/cli.hpp"
#include "hybridrf/serialize.hpp"
#include "json.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "hybridrf");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out;
  std::ostringstream err;
  const int code = hybridrf::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("hybridrf_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  std::string write(const std::string& name, const std::string& text) const {
    std::ofstream(path(name)) << text;
    return path(name);
  }

  fs::path dir_;
};

}  // namespace

TEST_F(CliTest, TrainEvalPredictOnCsv) {
  std::ostringstream csv;
  for (int i = 0; i < 200; ++i) csv << i % 17 << "," << (i % 2 ? 5 : -5) + i % 3 << "," << i % 2 << "\n";
  const auto data = write("train.csv", csv.str());
  const auto model = path("model.json");

  const Result trained = run({"train", "--data", data, "--label-col", "last", "--trees", "10",
                              "--mode", "hybrid-auto", "--seed", "1", "--threads", "1", "--out", model});
  ASSERT_EQ(trained.code, 0) << trained.err;
  EXPECT_EQ(trained.out.rfind("trained 10 trees on 200x2 in ", 0), 0u) << trained.out;
  EXPECT_EQ(std::count(trained.out.begin(), trained.out.end(), '\n'), 1);
  EXPECT_TRUE(fs::exists(model));

  const Result evaluated = run({"eval", "--data", data, "--model", model});
  ASSERT_EQ(evaluated.code, 0) << evaluated.err;
  EXPECT_EQ(evaluated.out, "accuracy 1.0000\n");

  const Result predicted = run({"predict", "--data", data, "--model", model});
  ASSERT_EQ(predicted.code, 0) << predicted.err;
  EXPECT_EQ(predicted.out.substr(0, 11), "0,0.000000\n");
  EXPECT_EQ(std::count(predicted.out.begin(), predicted.out.end(), '\n'), 200);
}

TEST_F(CliTest, SameFlagsGiveIdenticalModels) {
  const auto a = path("a.json");
  const auto b = path("b.json");
  for (const auto& out : {a, b}) {
    ASSERT_EQ(run({"train", "--synthetic", "500x6", "--trees", "3", "--seed", "4", "--threads",
                   out == a ? "1" : "3", "--out", out})
                  .code,
              0);
  }
  EXPECT_EQ(slurp(a), slurp(b));
  EXPECT_NO_THROW(hybridrf::deserialize(slurp(a)));
}

TEST_F(CliTest, ThresholdModeNeedsThreshold) {
  const Result r = run({"train", "--synthetic", "100x3", "--mode", "hybrid-threshold", "--out",
                        path("m.json")});
  EXPECT_EQ(r.code, hybridrf::cli::kUsage);
  EXPECT_NE(r.err.find("threshold"), std::string::npos);
}

TEST_F(CliTest, ZeroTreesIsValidationError) {
  const Result r = run({"train", "--synthetic", "100x3", "--trees", "0", "--out", path("m.json")});
  EXPECT_EQ(r.code, hybridrf::cli::kUsage);
}

TEST_F(CliTest, UsageErrors) {
  EXPECT_EQ(run({}).code, hybridrf::cli::kUsage);
  EXPECT_EQ(run({"fly"}).code, hybridrf::cli::kUsage);
  EXPECT_EQ(run({"train", "--synthetic", "100x3"}).code, hybridrf::cli::kUsage);
  EXPECT_EQ(run({"train", "--synthetic", "100", "--out", path("m")}).code, hybridrf::cli::kUsage);
  EXPECT_EQ(run({"train", "--synthetic", "100x3", "--metric", "mse", "--out", path("m")}).code,
            hybridrf::cli::kUsage);
  EXPECT_EQ(run({"train", "--synthetic", "100x3", "--max-depth", "deep", "--out", path("m")}).code,
            hybridrf::cli::kUsage);
}

TEST_F(CliTest, HelpExitsCleanly) {
  const Result r = run({"--help"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("train"), std::string::npos);
}

TEST_F(CliTest, IoAndDataErrors) {
  EXPECT_EQ(run({"train", "--data", path("missing.csv"), "--out", path("m")}).code,
            hybridrf::cli::kIo);
  const auto bad = write("bad.csv", "1,2,0\n1,2,7\n");
  EXPECT_EQ(run({"train", "--data", bad, "--out", path("m")}).code, hybridrf::cli::kIo);
  const auto junk = write("junk.json", "{}");
  EXPECT_EQ(run({"eval", "--synthetic", "10x2", "--model", junk}).code, hybridrf::cli::kIo);
}

TEST_F(CliTest, EvalOnMismatchedFeatureCount) {
  const auto model = path("m.json");
  ASSERT_EQ(run({"train", "--synthetic", "100x3", "--trees", "2", "--out", model}).code, 0);
  const Result r = run({"eval", "--synthetic", "100x4", "--model", model});
  EXPECT_EQ(r.code, hybridrf::cli::kUsage);
  EXPECT_NE(r.err.find("features"), std::string::npos);
}

TEST_F(CliTest, LibsvmInput) {
  const auto data = write("d.svm", "1 1:2.0\n-1 1:-2.0 2:1\n1 1:3 2:1\n-1 2:5\n");
  const auto model = path("m.json");
  ASSERT_EQ(run({"train", "--data", data, "--format", "libsvm", "--trees", "1", "--no-bootstrap",
                 "--max-features", "2", "--out", model})
                .code,
            0);
  EXPECT_EQ(run({"eval", "--data", data, "--format", "libsvm", "--model", model}).out,
            "accuracy 1.0000\n");
}

TEST_F(CliTest, CoverageSubcommand) {
  EXPECT_EQ(run({"coverage", "--m", "30", "--k", "5", "--depth", "5"}).out, "0.898918\n");
  EXPECT_EQ(run({"coverage", "--m", "30", "--k", "30", "--n", "1"}).out, "1.000000\n");
  EXPECT_EQ(run({"coverage", "--m", "10", "--k", "3", "--n", "4"}).out, "0.014948\n");
  EXPECT_EQ(run({"coverage", "--m", "30", "--k", "5", "--target", "0.89"}).out, "5\n");
  EXPECT_EQ(run({"coverage", "--m", "30", "--k", "5"}).code, hybridrf::cli::kUsage);
  EXPECT_EQ(run({"coverage", "--m", "3", "--k", "5", "--n", "2"}).code, hybridrf::cli::kUsage);
}

TEST_F(CliTest, BenchExpandsTheGrid) {
  const auto report = path("report.json");
  const Result r = run({"bench", "--synthetic", "2000x6", "--modes", "bfs,dfs,hybrid-auto",
                        "--trees", "1,2,4", "--seed", "3", "--threads", "2", "--report", report});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto doc = nlohmann::json::parse(slurp(report));
  EXPECT_EQ(doc["schema"], "hybridrf-bench/1");
  ASSERT_EQ(doc["runs"].size(), 9u);
  for (const auto& run : doc["runs"]) {
    const auto& phases = run["phases"];
    EXPECT_GE(phases["overhead"].get<double>(), -1e-9);
    EXPECT_LE(phases["bfs"].get<double>() + phases["dfs"].get<double>(),
              run["train_seconds"].get<double>() + 1e-9);
    EXPECT_GT(run["accuracy"].get<double>(), 0.9);
  }
  EXPECT_NE(r.out.find("accuracy parity across modes: ok"), std::string::npos);
}

TEST_F(CliTest, BenchThresholdSweep) {
  const auto report = path("sweep.json");
  const Result r = run({"bench", "--synthetic", "1000x4", "--modes", "hybrid-threshold",
                        "--thresholds", "0.001,0.01,0.1", "--trees", "2", "--report", report});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto doc = nlohmann::json::parse(slurp(report));
  ASSERT_EQ(doc["runs"].size(), 3u);
  EXPECT_EQ(doc["runs"][1]["threshold"].get<double>(), 0.01);
  EXPECT_EQ(run({"bench", "--synthetic", "1000x4", "--modes", "hybrid-threshold"}).code,
            hybridrf::cli::kUsage);
}

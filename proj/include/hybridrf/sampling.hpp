#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace hybridrf {

// xoshiro256** seeded through SplitMix64. The output sequence depends only on
// (master_seed, stream_index), never on the platform or thread schedule.
class RngStream {
 public:
  RngStream(std::uint64_t master_seed, std::uint64_t stream_index);

  std::uint64_t next();

  // Uniform integer in [0, bound). bound must be > 0.
  std::uint64_t uniform(std::uint64_t bound);

  // Uniform double in [0, 1) with 53 random bits.
  double uniform01();

  // Standard normal variate (Box-Muller, one value per call).
  double normal();

 private:
  std::array<std::uint64_t, 4> state_;
};

struct BootstrapSample {
  std::vector<std::uint32_t> multiplicity;
  std::uint64_t total_weight = 0;

  std::size_t num_examples() const { return multiplicity.size(); }
  std::size_t num_distinct() const;
};

// num_examples uniform draws with replacement, tallied per example.
BootstrapSample draw_bootstrap(RngStream& rng, std::size_t num_examples);

// Every example drawn exactly once; used when bootstrapping is disabled.
BootstrapSample identity_sample(std::size_t num_examples);

// k distinct feature indices drawn uniformly from [0, num_features), ascending.
// Throws std::invalid_argument unless 1 <= k <= num_features.
std::vector<std::uint32_t> sample_features(RngStream& rng, std::size_t num_features,
                                           std::size_t k);

// Feature subsets of one tree, one per depth. Subsets are drawn from the
// stream strictly in depth order (depth 0 first) no matter in which order
// depths are requested, so every node at a given depth sees the same subset
// whether it is grown breadth-first or depth-first.
class DepthFeatureSubsets {
 public:
  DepthFeatureSubsets(RngStream& rng, std::size_t num_features, std::size_t k);

  const std::vector<std::uint32_t>& at(std::size_t depth);

 private:
  RngStream& rng_;
  std::size_t num_features_;
  std::size_t k_;
  std::vector<std::vector<std::uint32_t>> subsets_;
};

// floor(sqrt(num_features)), at least 1.
std::size_t default_max_features(std::size_t num_features);

}  // namespace hybridrf

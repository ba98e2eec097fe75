#include "hybridrf/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace hybridrf {
namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
  std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace

RngStream::RngStream(std::uint64_t master_seed, std::uint64_t stream_index) {
  // Mix the two seeds through independent SplitMix64 chains so nearby
  // (seed, index) pairs land far apart.
  std::uint64_t a = master_seed;
  std::uint64_t mixed = splitmix64(a);
  std::uint64_t b = stream_index ^ 0x5851f42d4c957f2dULL;
  mixed ^= splitmix64(b);
  for (auto& word : state_) word = splitmix64(mixed);
}

std::uint64_t RngStream::next() {
  const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
  const std::uint64_t t = state_[1] << 17;
  state_[2] ^= state_[0];
  state_[3] ^= state_[1];
  state_[1] ^= state_[2];
  state_[0] ^= state_[3];
  state_[2] ^= t;
  state_[3] = rotl(state_[3], 45);
  return result;
}

std::uint64_t RngStream::uniform(std::uint64_t bound) {
  // Lemire's nearly divisionless method.
  unsigned __int128 product = static_cast<unsigned __int128>(next()) * bound;
  auto low = static_cast<std::uint64_t>(product);
  if (low < bound) {
    const std::uint64_t floor = (0 - bound) % bound;
    while (low < floor) {
      product = static_cast<unsigned __int128>(next()) * bound;
      low = static_cast<std::uint64_t>(product);
    }
  }
  return static_cast<std::uint64_t>(product >> 64);
}

double RngStream::uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

double RngStream::normal() {
  // 1 - u keeps the log argument in (0, 1].
  const double u1 = 1.0 - uniform01();
  const double u2 = uniform01();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::size_t BootstrapSample::num_distinct() const {
  return static_cast<std::size_t>(
      std::count_if(multiplicity.begin(), multiplicity.end(), [](auto c) { return c > 0; }));
}

BootstrapSample draw_bootstrap(RngStream& rng, std::size_t num_examples) {
  if (num_examples == 0) throw std::invalid_argument("bootstrap of an empty dataset");
  BootstrapSample sample;
  sample.multiplicity.assign(num_examples, 0);
  for (std::size_t i = 0; i < num_examples; ++i) ++sample.multiplicity[rng.uniform(num_examples)];
  sample.total_weight = num_examples;
  return sample;
}

BootstrapSample identity_sample(std::size_t num_examples) {
  return {std::vector<std::uint32_t>(num_examples, 1), num_examples};
}

std::vector<std::uint32_t> sample_features(RngStream& rng, std::size_t num_features,
                                           std::size_t k) {
  if (k < 1 || k > num_features) {
    throw std::invalid_argument("cannot sample " + std::to_string(k) + " of " +
                                std::to_string(num_features) + " features");
  }
  std::vector<std::uint32_t> chosen;
  chosen.reserve(k);
  if (k == num_features) {
    for (std::size_t f = 0; f < num_features; ++f) chosen.push_back(static_cast<std::uint32_t>(f));
    return chosen;
  }
  // Floyd's algorithm: k draws, each uniform over a growing range.
  std::vector<bool> taken(num_features);
  for (std::size_t j = num_features - k; j < num_features; ++j) {
    auto t = static_cast<std::uint32_t>(rng.uniform(j + 1));
    if (taken[t]) t = static_cast<std::uint32_t>(j);
    taken[t] = true;
    chosen.push_back(t);
  }
  std::sort(chosen.begin(), chosen.end());
  return chosen;
}

DepthFeatureSubsets::DepthFeatureSubsets(RngStream& rng, std::size_t num_features,
                                         std::size_t k)
    : rng_(rng), num_features_(num_features), k_(k) {
  if (k_ < 1 || k_ > num_features_) {
    throw std::invalid_argument("feature subset size must lie in [1, num_features]");
  }
}

const std::vector<std::uint32_t>& DepthFeatureSubsets::at(std::size_t depth) {
  while (subsets_.size() <= depth) subsets_.push_back(sample_features(rng_, num_features_, k_));
  return subsets_[depth];
}

std::size_t default_max_features(std::size_t num_features) {
  auto root = static_cast<std::size_t>(std::sqrt(static_cast<double>(num_features)));
  while (root * root > num_features) --root;
  while ((root + 1) * (root + 1) <= num_features) ++root;
  return std::max<std::size_t>(root, 1);
}

}  // namespace hybridrf

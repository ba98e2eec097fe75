#pragma once

#include <cstddef>
#include <cstdint>

namespace hybridrf {

struct CoverageQuery {
  std::size_t num_features = 1;     // m
  std::size_t sampled = 1;          // k, features drawn per node
  std::uint64_t num_draws = 0;      // n, nodes that drew a subset
};

// Probability that n independent uniform k-subsets of m features together
// cover every feature. Throws std::invalid_argument unless 1 <= k <= m.
double coverage_probability(const CoverageQuery& query);

// Smallest depth d >= 1 such that a full binary tree of d levels
// (2^d - 1 nodes) reaches `target` coverage. target must lie in (0, 1).
std::size_t coverage_depth(std::size_t num_features, std::size_t sampled, double target);

}  // namespace hybridrf

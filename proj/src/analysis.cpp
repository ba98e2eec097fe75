#include "hybridrf/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace hybridrf {
namespace {

long double log_choose(std::size_t n, std::size_t r) {
  return std::lgamma(static_cast<long double>(n) + 1) - std::lgamma(static_cast<long double>(r) + 1) -
         std::lgamma(static_cast<long double>(n - r) + 1);
}

// Distribution over the number of covered features, advanced one k-subset
// at a time. Every term is non-negative, so there is no cancellation.
double coverage_by_chain(std::size_t m, std::size_t k, std::uint64_t n) {
  const long double log_all = log_choose(m, k);
  // step[c][t]: probability that a draw adds t new features when c are covered.
  std::vector<std::vector<long double>> step(m + 1, std::vector<long double>(k + 1, 0.0L));
  for (std::size_t c = 0; c <= m; ++c) {
    for (std::size_t t = 0; t <= k; ++t) {
      if (t > m - c || k - t > c) continue;
      step[c][t] = std::exp(log_choose(m - c, t) + log_choose(c, k - t) - log_all);
    }
  }
  std::vector<long double> dist(m + 1, 0.0L);
  std::vector<long double> next(m + 1);
  dist[0] = 1.0L;
  for (std::uint64_t draw = 0; draw < n; ++draw) {
    std::fill(next.begin(), next.end(), 0.0L);
    for (std::size_t c = 0; c <= m; ++c) {
      if (dist[c] == 0.0L) continue;
      const std::size_t most = std::min(k, m - c);
      for (std::size_t t = 0; t <= most; ++t) next[c + t] += dist[c] * step[c][t];
    }
    dist.swap(next);
    if (dist[m] >= 1.0L - std::numeric_limits<long double>::epsilon()) return 1.0;
  }
  return static_cast<double>(std::clamp(dist[m], 0.0L, 1.0L));
}

}  // namespace

double coverage_probability(const CoverageQuery& query) {
  const std::size_t m = query.num_features;
  const std::size_t k = query.sampled;
  const std::uint64_t n = query.num_draws;
  if (k < 1 || k > m) throw std::invalid_argument("need 1 <= k <= m");
  if (n == 0) return 0.0;
  if (k == m) return 1.0;
  if (static_cast<unsigned __int128>(n) * k < m) return 0.0;

  // Inclusion-exclusion over the set of missed features:
  //   sum_j (-1)^j C(m, j) [C(m-j, k) / C(m, k)]^n,
  // with each term in log space and the two signs summed separately.
  const long double log_all = log_choose(m, k);
  long double positive = 0.0L;
  long double negative = 0.0L;
  long double largest = 0.0L;
  for (std::size_t j = 0; j <= m - k; ++j) {
    const long double log_term =
        log_choose(m, j) + static_cast<long double>(n) * (log_choose(m - j, k) - log_all);
    const long double term = std::exp(log_term);
    largest = std::max(largest, term);
    (j % 2 == 0 ? positive : negative) += term;
  }
  const long double result = positive - negative;
  const long double error_bound = largest * static_cast<long double>(m + 1) * 64 *
                                  std::numeric_limits<long double>::epsilon();
  if (error_bound > 1e-12L || result < 0.0L) return coverage_by_chain(m, k, n);
  return static_cast<double>(std::clamp(result, 0.0L, 1.0L));
}

std::size_t coverage_depth(std::size_t num_features, std::size_t sampled, double target) {
  if (!(target > 0.0 && target < 1.0)) throw std::invalid_argument("target must lie in (0, 1)");
  if (sampled < 1 || sampled > num_features) throw std::invalid_argument("need 1 <= k <= m");
  for (std::size_t depth = 1; depth < 64; ++depth) {
    const std::uint64_t nodes = (std::uint64_t{1} << depth) - 1;
    if (coverage_probability({num_features, sampled, nodes}) >= target) return depth;
  }
  throw std::domain_error("target coverage not reached within 63 levels");
}

}  // namespace hybridrf

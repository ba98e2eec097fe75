#include "hybridrf/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <thread>

#include "hybridrf/error.hpp"

namespace hybridrf {

Dataset::Dataset(std::size_t num_examples, std::size_t num_features, std::vector<float> values,
                 std::vector<std::uint8_t> labels)
    : num_examples_(num_examples),
      num_features_(num_features),
      values_(std::move(values)),
      labels_(std::move(labels)) {
  if (num_examples_ == 0) throw DataError("dataset has no rows");
  if (num_features_ == 0) throw DataError("dataset has no features");
  if (values_.size() != num_examples_ * num_features_) {
    throw DataError("value count " + std::to_string(values_.size()) + " does not match " +
                    std::to_string(num_examples_) + " x " + std::to_string(num_features_));
  }
  if (labels_.size() != num_examples_) throw DataError("label count does not match rows");
  for (std::size_t i = 0; i < num_examples_; ++i) {
    if (labels_[i] > 1) throw DataError("non-binary label at row " + std::to_string(i));
  }
  for (std::size_t k = 0; k < values_.size(); ++k) {
    if (!std::isfinite(values_[k])) {
      throw DataError("non-finite value at row " + std::to_string(k % num_examples_) +
                      ", feature " + std::to_string(k / num_examples_));
    }
  }
}

Dataset Dataset::from_rows(std::size_t num_examples, std::size_t num_features,
                           std::span<const float> row_major, std::vector<std::uint8_t> labels) {
  if (row_major.size() != num_examples * num_features) {
    throw DataError("row-major value count does not match shape");
  }
  std::vector<float> values(row_major.size());
  for (std::size_t i = 0; i < num_examples; ++i) {
    for (std::size_t f = 0; f < num_features; ++f) {
      values[f * num_examples + i] = row_major[i * num_features + f];
    }
  }
  return Dataset(num_examples, num_features, std::move(values), std::move(labels));
}

std::vector<float> Dataset::row(std::size_t example) const {
  std::vector<float> out(num_features_);
  for (std::size_t f = 0; f < num_features_; ++f) out[f] = value(example, f);
  return out;
}

Dataset Dataset::slice(std::size_t begin, std::size_t end) const {
  if (begin >= end || end > num_examples_) throw std::out_of_range("bad dataset slice");
  const std::size_t n = end - begin;
  std::vector<float> values(n * num_features_);
  for (std::size_t f = 0; f < num_features_; ++f) {
    auto column = feature_column(f).subspan(begin, n);
    std::copy(column.begin(), column.end(), values.begin() + f * n);
  }
  std::vector<std::uint8_t> labels(labels_.begin() + begin, labels_.begin() + end);
  return Dataset(n, num_features_, std::move(values), std::move(labels));
}

SortedMatrix SortedMatrix::build(const Dataset& data, std::size_t num_workers) {
  const std::size_t n = data.num_examples();
  const std::size_t m = data.num_features();
  if (n > std::size_t{SortedEntry::kMaxIndex} + 1) {
    throw DataError("dataset has " + std::to_string(n) +
                    " examples; at most 2^31 fit the packed example index");
  }
  SortedMatrix matrix;
  matrix.num_examples_ = n;
  matrix.num_features_ = m;
  matrix.entries_.resize(n * m);

  auto sort_column = [&](std::size_t f) {
    auto values = data.feature_column(f);
    SortedEntry* column = matrix.entries_.data() + f * n;
    for (std::size_t i = 0; i < n; ++i) {
      column[i] = {values[i], SortedEntry::pack(static_cast<std::uint32_t>(i), data.label(i))};
    }
    // Ties in value keep ascending example order.
    std::sort(column, column + n, [](const SortedEntry& a, const SortedEntry& b) {
      return a.value < b.value || (a.value == b.value && a.packed < b.packed);
    });
  };

  const std::size_t workers = std::clamp<std::size_t>(num_workers, 1, m);
  if (workers == 1) {
    for (std::size_t f = 0; f < m; ++f) sort_column(f);
    return matrix;
  }
  std::vector<std::jthread> threads;
  threads.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    threads.emplace_back([&, w] {
      for (std::size_t f = w; f < m; f += workers) sort_column(f);
    });
  }
  threads.clear();
  return matrix;
}

SortedMatrix SortedMatrix::filter(std::span<const std::uint8_t> keep) const {
  SortedMatrix out;
  out.num_features_ = num_features_;
  if (num_features_ == 0) return out;
  for (const SortedEntry& e : column(0)) out.num_examples_ += keep[e.index()] != 0;
  out.entries_.reserve(out.num_examples_ * num_features_);
  for (const SortedEntry& e : entries_) {
    if (keep[e.index()]) out.entries_.push_back(e);
  }
  return out;
}

void check_sorted_matrix(const SortedMatrix& matrix, const Dataset& data) {
  const std::size_t n = data.num_examples();
  if (matrix.num_examples() != n || matrix.num_features() != data.num_features()) {
    throw InvariantError("sorted matrix shape differs from dataset");
  }
  std::vector<std::uint8_t> seen(n);
  for (std::size_t f = 0; f < matrix.num_features(); ++f) {
    auto column = matrix.column(f);
    std::fill(seen.begin(), seen.end(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      const SortedEntry& e = column[i];
      const auto where = " (feature " + std::to_string(f) + ", position " + std::to_string(i) + ")";
      if (i > 0 && e.value < column[i - 1].value) throw InvariantError("column not sorted" + where);
      if (e.index() >= n || seen[e.index()]) {
        throw InvariantError("column is not a permutation" + where);
      }
      seen[e.index()] = 1;
      if (e.label() != data.label(e.index())) throw InvariantError("label bit mismatch" + where);
      if (e.value != data.value(e.index(), f)) throw InvariantError("value mismatch" + where);
    }
  }
}

}  // namespace hybridrf

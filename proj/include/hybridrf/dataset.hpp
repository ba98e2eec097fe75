#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

namespace hybridrf {

// Dense binary-classification training data. Values are stored feature-major
// so a whole feature column is contiguous, while value(example, feature)
// stays a constant-time lookup.
class Dataset {
 public:
  Dataset() = default;
  // `values` is feature-major: values[feature * num_examples + example].
  Dataset(std::size_t num_examples, std::size_t num_features,
          std::vector<float> values, std::vector<std::uint8_t> labels);

  // Builds from row-major values (values[example * num_features + feature]).
  static Dataset from_rows(std::size_t num_examples, std::size_t num_features,
                           std::span<const float> row_major,
                           std::vector<std::uint8_t> labels);

  std::size_t num_examples() const { return num_examples_; }
  std::size_t num_features() const { return num_features_; }

  float value(std::size_t example, std::size_t feature) const {
    return values_[feature * num_examples_ + example];
  }
  std::uint8_t label(std::size_t example) const { return labels_[example]; }

  std::span<const float> feature_column(std::size_t feature) const {
    return {values_.data() + feature * num_examples_, num_examples_};
  }
  std::span<const std::uint8_t> labels() const { return labels_; }

  std::vector<float> row(std::size_t example) const;

  // Contiguous range of examples [begin, end) as a new dataset.
  Dataset slice(std::size_t begin, std::size_t end) const;

  friend bool operator==(const Dataset&, const Dataset&) = default;

 private:
  std::size_t num_examples_ = 0;
  std::size_t num_features_ = 0;
  std::vector<float> values_;
  std::vector<std::uint8_t> labels_;
};

// One sorted-matrix cell: a feature value plus the example index with the
// label stolen into the lowest bit. 8 bytes total.
struct SortedEntry {
  float value;
  std::uint32_t packed;

  static constexpr std::uint32_t kMaxIndex = (std::uint32_t{1} << 31) - 1;

  static constexpr std::uint32_t pack(std::uint32_t index, std::uint32_t label) {
    return (index << 1) | (label & 1u);
  }
  constexpr std::uint32_t index() const { return packed >> 1; }
  constexpr std::uint32_t label() const { return packed & 1u; }

  friend bool operator==(const SortedEntry&, const SortedEntry&) = default;
};
static_assert(sizeof(SortedEntry) == 8);

// Per-feature columns of SortedEntry ordered by (value, example index).
// Built once, then shared read-only by every tree builder.
class SortedMatrix {
 public:
  SortedMatrix() = default;

  // Throws DataError when the dataset has more than 2^31 examples.
  static SortedMatrix build(const Dataset& data, std::size_t num_workers = 1);

  // Copy holding only the entries of examples with keep[example] != 0, in the
  // same order and with the same example indices. `keep` is indexed by
  // example index.
  SortedMatrix filter(std::span<const std::uint8_t> keep) const;

  // Entries per column: the example count, or the kept count after filter().
  std::size_t num_examples() const { return num_examples_; }
  std::size_t num_features() const { return num_features_; }

  std::span<const SortedEntry> column(std::size_t feature) const {
    return {entries_.data() + feature * num_examples_, num_examples_};
  }
  const SortedEntry& at(std::size_t feature, std::size_t position) const {
    return entries_[feature * num_examples_ + position];
  }

  friend bool operator==(const SortedMatrix&, const SortedMatrix&) = default;

 private:
  std::size_t num_examples_ = 0;
  std::size_t num_features_ = 0;
  std::vector<SortedEntry> entries_;
};

// Verifies sortedness, permutation and label-bit invariants against the
// source dataset. Throws InvariantError describing the first violation.
void check_sorted_matrix(const SortedMatrix& matrix, const Dataset& data);

struct CsvOptions {
  // Zero-based label column; nullopt selects the last column.
  std::optional<std::size_t> label_column;
  bool skip_header = false;
};

Dataset read_csv(std::istream& in, const CsvOptions& options = {});
Dataset load_csv(const std::filesystem::path& path, const CsvOptions& options = {});

// Sparse "label idx:val ..." lines with 1-based indices; labels {0,1} or {-1,+1}.
Dataset read_libsvm(std::istream& in);
Dataset load_libsvm(const std::filesystem::path& path);

// Two unit-variance Gaussian blobs centred at -1 (class 0) and +1 (class 1)
// in every feature. Example i has label i % 2.
Dataset generate_synthetic(std::size_t num_examples, std::size_t num_features,
                           std::uint64_t seed);

}  // namespace hybridrf

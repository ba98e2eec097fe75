#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "hybridrf/dataset.hpp"
#include "hybridrf/error.hpp"
#include "hybridrf/sampling.hpp"

namespace hybridrf {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

bool parse_double(std::string_view text, double& out) {
  text = trim(text);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  if (text.empty()) return false;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc() && ptr == text.data() + text.size();
}

std::string at_row(std::size_t row) { return " at row " + std::to_string(row); }

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return in;
}

}  // namespace

Dataset read_csv(std::istream& in, const CsvOptions& options) {
  std::vector<float> row_major;
  std::vector<std::uint8_t> labels;
  std::size_t fields_per_row = 0;
  std::size_t label_column = 0;
  std::size_t row = 0;
  std::string line;
  bool header_pending = options.skip_header;
  std::vector<std::string_view> fields;

  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    if (header_pending) {
      header_pending = false;
      continue;
    }
    ++row;
    fields.clear();
    std::string_view rest = line;
    for (;;) {
      const auto comma = rest.find(',');
      fields.push_back(rest.substr(0, comma));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (row == 1) {
      fields_per_row = fields.size();
      if (fields_per_row < 2) throw DataError("need at least one feature and a label" + at_row(row));
      label_column = options.label_column.value_or(fields_per_row - 1);
      if (label_column >= fields_per_row) {
        throw DataError("label column " + std::to_string(label_column) + " out of range");
      }
    } else if (fields.size() != fields_per_row) {
      throw DataError("ragged row: expected " + std::to_string(fields_per_row) + " fields, got " +
                      std::to_string(fields.size()) + at_row(row));
    }
    for (std::size_t c = 0; c < fields.size(); ++c) {
      double value = 0.0;
      if (!parse_double(fields[c], value)) {
        throw DataError("parse failure" + at_row(row) + ", column " + std::to_string(c));
      }
      if (c == label_column) {
        if (value != 0.0 && value != 1.0) throw DataError("non-binary label" + at_row(row));
        labels.push_back(static_cast<std::uint8_t>(value));
      } else {
        if (!std::isfinite(static_cast<float>(value))) {
          throw DataError("non-finite value" + at_row(row) + ", column " + std::to_string(c));
        }
        row_major.push_back(static_cast<float>(value));
      }
    }
  }
  if (in.bad()) throw IoError("read error");
  if (row == 0) throw DataError("no rows");
  return Dataset::from_rows(row, fields_per_row - 1, row_major, std::move(labels));
}

Dataset load_csv(const std::filesystem::path& path, const CsvOptions& options) {
  auto in = open_input(path);
  return read_csv(in, options);
}

Dataset read_libsvm(std::istream& in) {
  std::vector<std::vector<std::pair<std::size_t, float>>> rows;
  std::vector<std::uint8_t> labels;
  std::size_t num_features = 0;
  std::size_t row = 0;
  std::string line;

  while (std::getline(in, line)) {
    std::string_view rest = trim(line);
    if (const auto hash = rest.find('#'); hash != std::string_view::npos) {
      rest = trim(rest.substr(0, hash));
    }
    if (rest.empty()) continue;
    ++row;
    auto next_token = [&rest]() {
      while (!rest.empty() && (rest.front() == ' ' || rest.front() == '\t')) rest.remove_prefix(1);
      const auto end = rest.find_first_of(" \t");
      auto token = rest.substr(0, end);
      rest.remove_prefix(end == std::string_view::npos ? rest.size() : end);
      return token;
    };

    double label = 0.0;
    const auto label_token = next_token();
    if (!parse_double(label_token, label)) throw DataError("malformed label" + at_row(row));
    if (label == 1.0) {
      labels.push_back(1);
    } else if (label == 0.0 || label == -1.0) {
      labels.push_back(0);
    } else {
      throw DataError("label '" + std::string(label_token) + "' is not in {0,1} or {-1,+1}" +
                      at_row(row));
    }

    auto& features = rows.emplace_back();
    for (auto token = next_token(); !token.empty(); token = next_token()) {
      const auto colon = token.find(':');
      std::size_t index = 0;
      double value = 0.0;
      bool ok = colon != std::string_view::npos;
      if (ok) {
        auto [ptr, ec] = std::from_chars(token.data(), token.data() + colon, index);
        ok = ec == std::errc() && ptr == token.data() + colon && index >= 1 &&
             parse_double(token.substr(colon + 1), value) && std::isfinite(static_cast<float>(value));
      }
      if (!ok) throw DataError("malformed token '" + std::string(token) + "'" + at_row(row));
      features.emplace_back(index - 1, static_cast<float>(value));
      num_features = std::max(num_features, index);
    }
  }
  if (in.bad()) throw IoError("read error");
  if (row == 0) throw DataError("no rows");
  if (num_features == 0) throw DataError("no features");

  const std::size_t n = rows.size();
  std::vector<float> values(n * num_features, 0.0f);
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto& [f, v] : rows[i]) values[f * n + i] = v;
  }
  return Dataset(n, num_features, std::move(values), std::move(labels));
}

Dataset load_libsvm(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_libsvm(in);
}

Dataset generate_synthetic(std::size_t num_examples, std::size_t num_features,
                           std::uint64_t seed) {
  if (num_examples == 0 || num_features == 0) {
    throw std::invalid_argument("synthetic dataset needs at least one example and feature");
  }
  RngStream rng(seed, 0);
  std::vector<float> row_major(num_examples * num_features);
  std::vector<std::uint8_t> labels(num_examples);
  for (std::size_t i = 0; i < num_examples; ++i) {
    labels[i] = static_cast<std::uint8_t>(i % 2);
    const double centre = labels[i] ? 1.0 : -1.0;
    for (std::size_t f = 0; f < num_features; ++f) {
      row_major[i * num_features + f] = static_cast<float>(centre + rng.normal());
    }
  }
  return Dataset::from_rows(num_examples, num_features, row_major, std::move(labels));
}

}  // namespace hybridrf

#include "hybridrf/serialize.hpp"

#include <charconv>
#include <cmath>
#include <string>

#include "json.hpp"

#include "hybridrf/error.hpp"

namespace hybridrf {
namespace {

using Json = nlohmann::ordered_json;

Json node_to_json(const TreeNode& node) {
  if (node.is_leaf()) return Json{{"counts", {node.counts.zeros, node.counts.ones}}};
  return Json{{"feature", node.feature},
              {"threshold", format_hex_float(node.threshold)},
              {"left", node.left},
              {"right", node.right}};
}

template <class T>
T require(const Json& object, const char* key, const std::string& where) {
  const auto it = object.find(key);
  if (it == object.end()) throw DataError("missing '" + std::string(key) + "' in " + where);
  try {
    return it->template get<T>();
  } catch (const nlohmann::json::exception&) {
    throw DataError("bad '" + std::string(key) + "' in " + where);
  }
}

TreeNode node_from_json(const Json& j, std::size_t num_features, const std::string& where) {
  if (!j.is_object()) throw DataError(where + " is not an object");
  TreeNode node;
  if (j.contains("counts")) {
    const Json& counts = j.at("counts");
    if (!counts.is_array() || counts.size() != 2 || !counts[0].is_number_unsigned() ||
        !counts[1].is_number_unsigned()) {
      throw DataError("leaf counts must be two non-negative integers in " + where);
    }
    node.counts = {counts[0].get<std::uint64_t>(), counts[1].get<std::uint64_t>()};
    return node;
  }
  const auto feature = require<std::int64_t>(j, "feature", where);
  if (feature < 0 || static_cast<std::size_t>(feature) >= num_features) {
    throw DataError("feature index out of range in " + where);
  }
  node.feature = static_cast<std::int32_t>(feature);
  node.threshold = parse_hex_float(require<std::string>(j, "threshold", where));
  node.left = require<std::int32_t>(j, "left", where);
  node.right = require<std::int32_t>(j, "right", where);
  return node;
}

}  // namespace

std::string format_hex_float(float value) {
  char buffer[32];
  const auto result = std::to_chars(buffer, buffer + sizeof buffer, value, std::chars_format::hex);
  std::string digits(buffer, result.ptr);
  if (!digits.empty() && digits.front() == '-') return "-0x" + digits.substr(1);
  return "0x" + digits;
}

float parse_hex_float(std::string_view text) {
  const std::string original(text);
  bool negative = false;
  if (!text.empty() && (text.front() == '-' || text.front() == '+')) {
    negative = text.front() == '-';
    text.remove_prefix(1);
  }
  if (text.size() < 3 || text[0] != '0' || (text[1] != 'x' && text[1] != 'X')) {
    throw DataError("'" + original + "' is not a hex float");
  }
  text.remove_prefix(2);
  float value = 0.0f;
  const auto [ptr, ec] =
      std::from_chars(text.data(), text.data() + text.size(), value, std::chars_format::hex);
  if (ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(value)) {
    throw DataError("'" + original + "' is not a finite hex float");
  }
  return negative ? -value : value;
}

std::string serialize(const ForestModel& model) {
  Json doc;
  doc["format_version"] = ForestModel::kFormatVersion;
  doc["num_features"] = model.num_features;
  doc["metric"] = to_string(model.metric);
  const ModelParams& p = model.params;
  doc["params"] = Json{{"num_trees", p.num_trees},
                       {"max_depth", p.max_depth ? Json(*p.max_depth) : Json(nullptr)},
                       {"max_features", p.max_features},
                       {"min_leaf_weight", p.min_leaf_weight},
                       {"seed", p.seed},
                       {"bootstrap", p.bootstrap}};
  Json trees = Json::array();
  for (const TreeModel& tree : model.trees) {
    Json nodes = Json::array();
    for (const TreeNode& node : tree.nodes()) nodes.push_back(node_to_json(node));
    trees.push_back(Json{{"nodes", std::move(nodes)}});
  }
  doc["trees"] = std::move(trees);
  return doc.dump() + "\n";
}

ForestModel deserialize(std::string_view text) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError(std::string("malformed model document: ") + e.what());
  }
  if (!doc.is_object()) throw DataError("model document is not an object");
  const auto version = require<int>(doc, "format_version", "document");
  if (version != ForestModel::kFormatVersion) {
    throw DataError("unsupported format version " + std::to_string(version) + " (expected " +
                    std::to_string(ForestModel::kFormatVersion) + ")");
  }

  ForestModel model;
  model.num_features = require<std::size_t>(doc, "num_features", "document");
  if (model.num_features == 0) throw DataError("num_features must be >= 1");
  try {
    model.metric = parse_metric(require<std::string>(doc, "metric", "document"));
  } catch (const ConfigError& e) {
    throw DataError(e.what());
  }

  const auto params = doc.find("params");
  if (params == doc.end() || !params->is_object()) throw DataError("missing 'params'");
  ModelParams& p = model.params;
  p.num_trees = require<std::size_t>(*params, "num_trees", "params");
  if (const auto depth = params->find("max_depth"); depth != params->end() && !depth->is_null()) {
    p.max_depth = require<std::size_t>(*params, "max_depth", "params");
  }
  p.max_features = require<std::size_t>(*params, "max_features", "params");
  p.min_leaf_weight = require<std::uint64_t>(*params, "min_leaf_weight", "params");
  p.seed = require<std::uint64_t>(*params, "seed", "params");
  p.bootstrap = require<bool>(*params, "bootstrap", "params");

  const auto trees = doc.find("trees");
  if (trees == doc.end() || !trees->is_array()) throw DataError("missing 'trees' array");
  if (trees->size() != p.num_trees) throw DataError("tree count does not match params.num_trees");
  for (std::size_t t = 0; t < trees->size(); ++t) {
    const Json& tree = (*trees)[t];
    const std::string where = "tree " + std::to_string(t);
    if (!tree.is_object() || !tree.contains("nodes") || !tree.at("nodes").is_array()) {
      throw DataError(where + " has no node array");
    }
    std::vector<TreeNode> nodes;
    const Json& array = tree.at("nodes");
    nodes.reserve(array.size());
    for (std::size_t i = 0; i < array.size(); ++i) {
      nodes.push_back(
          node_from_json(array[i], model.num_features, where + ", node " + std::to_string(i)));
    }
    try {
      model.trees.emplace_back(std::move(nodes));
    } catch (const InvariantError& e) {
      throw DataError(where + ": " + e.what());
    }
  }
  return model;
}

}  // namespace hybridrf

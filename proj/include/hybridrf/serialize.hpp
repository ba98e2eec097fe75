#pragma once

#include <string>
#include <string_view>

#include "hybridrf/forest.hpp"

namespace hybridrf {

// Hexadecimal floating-point text, e.g. 2.5f -> "0x1.4p+1". Exact round trip.
std::string format_hex_float(float value);
// Throws DataError on malformed input or a value not representable as float.
float parse_hex_float(std::string_view text);

// Versioned JSON document: format_version, num_features, metric, params and
// trees (flat pre-order node arrays with integer child indices).
std::string serialize(const ForestModel& model);
// Throws DataError on malformed documents, version mismatch or bad node
// references.
ForestModel deserialize(std::string_view text);

}  // namespace hybridrf

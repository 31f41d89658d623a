#pragma once

#include <json.hpp>

#include "keratoflow/nn/network.hpp"

namespace keratoflow::nn {

inline constexpr int kCheckpointVersion = 1;

/// {"widths": [...], "layers": [{"activation", "in", "out", "weights" (row-major), "biases"}]}
nlohmann::json network_to_json(const DenseNetwork& net);
/// Throws ValidationError on malformed or inconsistent documents.
DenseNetwork network_from_json(const nlohmann::json& doc);

}  // namespace keratoflow::nn

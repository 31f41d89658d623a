#include "keratoflow/nn/checkpoint.hpp"

#include <string>

#include "keratoflow/error.hpp"

namespace keratoflow::nn {

nlohmann::json network_to_json(const DenseNetwork& net) {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& l : net.layers()) {
    layers.push_back({{"activation", std::string(to_string(l.activation))},
                      {"in", l.in_dim()},
                      {"out", l.out_dim()},
                      {"weights", std::vector<double>(l.weights.values().begin(),
                                                      l.weights.values().end())},
                      {"biases", l.biases}});
  }
  return {{"widths", net.widths()}, {"layers", std::move(layers)}};
}

DenseNetwork network_from_json(const nlohmann::json& doc) {
  try {
    std::vector<DenseLayer> layers;
    for (const auto& entry : doc.at("layers")) {
      const auto in = entry.at("in").get<std::size_t>();
      const auto out = entry.at("out").get<std::size_t>();
      DenseLayer layer;
      layer.activation = activation_from_string(entry.at("activation").get<std::string>());
      layer.weights = Matrix(out, in, entry.at("weights").get<std::vector<double>>());
      layer.biases = entry.at("biases").get<std::vector<double>>();
      layers.push_back(std::move(layer));
    }
    DenseNetwork net(std::move(layers));
    if (doc.contains("widths") && doc.at("widths").get<std::vector<std::size_t>>() != net.widths()) {
      throw ValidationError("checkpoint widths do not match its layers");
    }
    if (!net.all_finite()) throw ValidationError("checkpoint contains non-finite parameters");
    return net;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed network checkpoint: ") + e.what());
  }
}

}  // namespace keratoflow::nn

#include "crnc/relu_net.hpp"

#include <json.hpp>

#include "crnc/errors.hpp"

namespace crnc {

using nlohmann::json;

ReluNetwork::ReluNetwork(std::size_t input_dim, std::vector<Layer> layers)
    : input_dim_(input_dim), layers_(std::move(layers)) {
  if (input_dim_ == 0) throw DimensionMismatch("network input dimension must be positive");
  if (layers_.empty()) throw DimensionMismatch("network has no layers");
  std::size_t width = input_dim_;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& layer = layers_[l];
    const std::string where = "layer " + std::to_string(l);
    if (layer.weights.empty()) throw DimensionMismatch(where + " has no units");
    if (layer.biases.size() != layer.weights.size()) throw DimensionMismatch(where + ": bias count differs from unit count");
    for (const auto& row : layer.weights) {
      if (row.size() != width) {
        throw DimensionMismatch(where + ": expected " + std::to_string(width) + " inputs per unit, got " +
                                std::to_string(row.size()));
      }
    }
    width = layer.weights.size();
  }
}

std::vector<Rational> forward(const ReluNetwork& net, std::span<const Rational> x) {
  if (x.size() != net.input_dim()) {
    throw DimensionMismatch("input has " + std::to_string(x.size()) + " entries, network expects " +
                            std::to_string(net.input_dim()));
  }
  std::vector<Rational> act(x.begin(), x.end());
  for (const auto& layer : net.layers()) {
    std::vector<Rational> next(layer.units());
    for (std::size_t u = 0; u < layer.units(); ++u) {
      Rational v = layer.biases[u];
      for (std::size_t k = 0; k < act.size(); ++k) {
        if (!layer.weights[u][k].is_zero()) v += layer.weights[u][k] * act[k];
      }
      if (layer.relu && v.sign() < 0) v = Rational(0);
      next[u] = std::move(v);
    }
    act = std::move(next);
  }
  return act;
}

BinaryWeightTag classify_binary(const ReluNetwork& net) {
  const Rational one(1);
  for (const auto& layer : net.layers()) {
    for (const auto& row : layer.weights) {
      for (const auto& w : row) {
        if (!w.is_zero() && w.abs() != one) return {false};
      }
    }
  }
  return {true};
}

namespace {

Rational rational_field(const json& j, const std::string& where) {
  if (!j.is_string()) throw ParseError(where + ": rationals must be strings like \"p/q\"");
  try {
    return Rational::parse(j.get<std::string>());
  } catch (const ParseError& e) {
    throw ParseError(where + ": " + e.what());
  }
}

void reject_unknown(const json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
  for (const auto& [key, value] : obj.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw ParseError(where + ": unknown field '" + key + "'");
  }
}

}  // namespace

ReluNetwork parse_network(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ParseError("network must be a JSON object");
  reject_unknown(doc, {"input_dim", "layers"}, "network");
  if (!doc.contains("input_dim") || !doc["input_dim"].is_number_unsigned()) {
    throw ParseError("network: 'input_dim' must be a positive integer");
  }
  if (!doc.contains("layers") || !doc["layers"].is_array()) throw ParseError("network: 'layers' must be an array");
  if (doc["layers"].empty()) throw ParseError("network: 'layers' must not be empty");

  std::vector<Layer> layers;
  for (std::size_t l = 0; l < doc["layers"].size(); ++l) {
    const json& jl = doc["layers"][l];
    const std::string where = "layers[" + std::to_string(l) + "]";
    if (!jl.is_object()) throw ParseError(where + " must be an object");
    reject_unknown(jl, {"weights", "biases", "relu"}, where);
    if (!jl.contains("weights") || !jl["weights"].is_array()) throw ParseError(where + ": 'weights' must be an array");
    if (!jl.contains("biases") || !jl["biases"].is_array()) throw ParseError(where + ": 'biases' must be an array");
    Layer layer;
    for (std::size_t u = 0; u < jl["weights"].size(); ++u) {
      const json& row = jl["weights"][u];
      if (!row.is_array()) throw ParseError(where + ".weights[" + std::to_string(u) + "] must be an array");
      std::vector<Rational> parsed;
      for (std::size_t k = 0; k < row.size(); ++k) {
        parsed.push_back(rational_field(row[k], where + ".weights[" + std::to_string(u) + "][" + std::to_string(k) + "]"));
      }
      layer.weights.push_back(std::move(parsed));
    }
    for (std::size_t u = 0; u < jl["biases"].size(); ++u) {
      layer.biases.push_back(rational_field(jl["biases"][u], where + ".biases[" + std::to_string(u) + "]"));
    }
    if (jl.contains("relu")) {
      if (!jl["relu"].is_boolean()) throw ParseError(where + ": 'relu' must be a boolean");
      layer.relu = jl["relu"].get<bool>();
    }
    layers.push_back(std::move(layer));
  }
  try {
    return ReluNetwork(doc["input_dim"].get<std::size_t>(), std::move(layers));
  } catch (const DimensionMismatch& e) {
    throw ParseError(std::string("network: ") + e.what());
  }
}

std::string print_network(const ReluNetwork& net) {
  json layers = json::array();
  for (const auto& layer : net.layers()) {
    json weights = json::array();
    for (const auto& row : layer.weights) {
      json jr = json::array();
      for (const auto& w : row) jr.push_back(w.to_string());
      weights.push_back(std::move(jr));
    }
    json biases = json::array();
    for (const auto& b : layer.biases) biases.push_back(b.to_string());
    layers.push_back({{"weights", std::move(weights)}, {"biases", std::move(biases)}, {"relu", layer.relu}});
  }
  json doc = {{"input_dim", net.input_dim()}, {"layers", std::move(layers)}};
  return doc.dump(2) + "\n";
}

}  // namespace crnc

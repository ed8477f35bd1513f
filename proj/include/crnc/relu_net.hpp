#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "crnc/rational.hpp"

namespace crnc {

struct Layer {
  std::vector<std::vector<Rational>> weights;  // rows = units, cols = inputs
  std::vector<Rational> biases;
  bool relu = true;

  std::size_t units() const { return weights.size(); }

  friend bool operator==(const Layer&, const Layer&) = default;
};

// Feed-forward network with exact rational weights.
class ReluNetwork {
 public:
  // Throws DimensionMismatch when layer shapes do not chain.
  ReluNetwork(std::size_t input_dim, std::vector<Layer> layers);

  std::size_t input_dim() const { return input_dim_; }
  std::size_t output_dim() const { return layers_.back().units(); }
  const std::vector<Layer>& layers() const { return layers_; }

  friend bool operator==(const ReluNetwork&, const ReluNetwork&) = default;

 private:
  std::size_t input_dim_;
  std::vector<Layer> layers_;
};

std::vector<Rational> forward(const ReluNetwork& net, std::span<const Rational> x);

struct BinaryWeightTag {
  bool is_binary = false;
};

// Binary iff every weight lies in {-1, 0, 1}.
BinaryWeightTag classify_binary(const ReluNetwork& net);

// JSON schema:
//   {"input_dim": n,
//    "layers": [{"weights": [["p/q", ...], ...], "biases": ["p/q", ...], "relu": true}]}
// Unknown fields are rejected; "relu" defaults to true.
ReluNetwork parse_network(std::string_view text);
std::string print_network(const ReluNetwork& net);

}  // namespace crnc

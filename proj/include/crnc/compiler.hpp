#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "crnc/crn.hpp"
#include "crnc/rational.hpp"
#include "crnc/relu_net.hpp"

namespace crnc {

// x = conc(pos) - conc(neg). `base` is the species name without its rail tag.
struct DualRailValue {
  std::string base;
  SpeciesId pos;
  SpeciesId neg;
};

enum class RailRole { kInternal, kInput, kOutput };

// Declares base+"+" and base+"-".
DualRailValue add_dual_rail(Crn& crn, const std::string& base, RailRole role = RailRole::kInternal);

// |w| = a.b(c)^inf in base 2, with minimal transient and period.
struct BinaryExpansion {
  std::string integer_bits;    // a, most significant first; "0" when |w| < 1
  std::string transient_bits;  // b
  std::string repeating_bits;  // c, empty iff the denominator is a power of two

  Rational value() const;
  friend bool operator==(const BinaryExpansion&, const BinaryExpansion&) = default;
};

// Requires w > 0.
BinaryExpansion binary_expansion(const Rational& w);

// kChain is the doubling/halving chain with i+j+k+1 reactions per rail.
// kCompact folds the integer part into one unimolecular step (X -> A Y + R0)
// and feeds X straight into the halving chain when A = 0.
enum class MultiplierForm { kChain, kCompact };

void emit_fan_out(Crn& crn, const DualRailValue& input, std::span<const DualRailValue> outputs);

// Adds w * input to `output`. Negative weights cross the rails. Internal chain
// species are named after input.base. Requires w != 0.
void emit_rational_multiplier(Crn& crn, const DualRailValue& input, const Rational& w, const DualRailValue& output,
                              MultiplierForm form = MultiplierForm::kChain);

struct WeightedInput {
  DualRailValue value;
  Rational weight;
};

// One compact multiplier per nonzero weight; throws Error if all weights are zero.
void emit_weighted_sum(Crn& crn, std::span<const WeightedInput> inputs, const DualRailValue& output);

// X+ -> M + Y+, M + X- -> Y-.
void emit_relu(Crn& crn, const DualRailValue& input, const DualRailValue& output, SpeciesId helper);

void emit_min(Crn& crn, const DualRailValue& a, const DualRailValue& b, const DualRailValue& output);
void emit_max(Crn& crn, const DualRailValue& a, const DualRailValue& b, const DualRailValue& output);

struct AffinePiece {
  std::vector<Rational> weights;
  Rational bias;
};

// f(x) = max_i min_{j in families[i]} pieces[j](x)
struct MaxMinSpec {
  std::size_t input_dim = 0;
  std::vector<AffinePiece> pieces;
  std::vector<std::vector<std::size_t>> families;
};

// Inputs X1..Xn, output Y. Throws Error on an empty family or bad indices.
Crn compile_pwl(const MaxMinSpec& spec);

// Species names used by compile_network.
namespace naming {
std::string input(std::size_t k);
std::string fan_out(std::size_t layer, std::size_t source, std::size_t target);
std::string sum(std::size_t layer, std::size_t unit);
std::string helper(std::size_t layer, std::size_t unit);
std::string activation(std::size_t layer, std::size_t unit);
std::string output(std::size_t unit, std::size_t output_count);
}  // namespace naming

enum class BreluMode { kAuto, kOn, kOff };

struct CompileOptions {
  BreluMode brelu = BreluMode::kAuto;
};

// Throws Error when BreluMode::kOn is requested for a non-binary network.
Crn compile_network(const ReluNetwork& net, const CompileOptions& options = {});

struct DualRailInterface {
  std::vector<DualRailValue> inputs;
  std::vector<DualRailValue> outputs;
};

// Pairs input+/input- and output+/output- species by base name, in declaration order.
DualRailInterface dual_rail_interface(const Crn& crn);

// Initial state with x added on the input rails; `offset` is added to both rails.
State encode_inputs(const Crn& crn, std::span<const Rational> x, const Rational& offset = Rational(0));
std::vector<Rational> decode_outputs(const Crn& crn, const State& state);
std::vector<double> decode_outputs(const Crn& crn, std::span<const double> state);

// decode_outputs with the interface resolved once, for per-step use.
std::function<std::vector<double>(const std::vector<double>&)> output_observer(const Crn& crn);

}  // namespace crnc

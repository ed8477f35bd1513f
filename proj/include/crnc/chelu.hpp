#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "crnc/crn.hpp"
#include "crnc/relu_net.hpp"

namespace crnc {

struct CheluCert {
  std::vector<ReactionId> ordering;  // feed-forward witness
  std::vector<int> arity;            // reactant count per reaction, by declaration index
};

// Restrictions in the order they are checked.
enum class CheluRule { kAtMostTwoReactants, kFeedForward, kUnitStoichiometry, kNonCompetitive };

std::string_view chelu_rule_name(CheluRule rule);

struct CheluViolation {
  CheluRule rule;
  std::vector<ReactionId> reactions;  // 0-based
  std::optional<SpeciesId> species;
  std::string message;
};

using CheluCheck = std::variant<CheluCert, CheluViolation>;

CheluCheck check_chelu(const Crn& crn);

// One network input and output per species, in declaration order. Each
// bimolecular reaction A + B -> P contributes a ReLU layer computing
// h = ReLU(a - b) next to identity pass-throughs, then a linear layer with
// a' = h, b' = b - a + h, p' = p + a - h. A unimolecular A -> P is a single
// linear layer a' = 0, p' = p + a. Throws Error if `cert` does not match `crn`.
ReluNetwork translate_to_brelu(const Crn& crn, const CheluCert& cert);

// ReLU units that are not single +1 identity pass-throughs.
std::size_t relu_node_count(const ReluNetwork& net);

struct SimulationReport {
  std::size_t trials = 0;
  std::size_t mismatches = 0;
  Rational max_abs_error;
  std::vector<std::vector<Rational>> mismatched_inputs;  // first few only

  std::string to_json() const;
};

// Compares the oracle equilibrium from random nonnegative rational initial
// states against forward(net, state), exactly.
SimulationReport verify_simulation(const Crn& crn, const ReluNetwork& net, std::size_t trials, std::uint64_t seed = 1);

}  // namespace crnc

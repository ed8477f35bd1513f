#pragma once

#include <cstddef>
#include <random>
#include <string>
#include <vector>

#include "crnc/crn.hpp"
#include "crnc/oracle.hpp"
#include "crnc/relu_net.hpp"

namespace crnc::testing {

using Rng = std::mt19937_64;

struct NetShape {
  std::size_t max_layers = 3;
  std::size_t max_units = 8;
  std::size_t max_inputs = 4;
  bool binary = false;
  bool allow_zero = true;
  long max_numerator = 6;  // rational weights are p/q with |p| <= this, q in {1,2,3,4,6,8}
};

Rational random_rational(Rng& rng, long max_abs_numerator, bool allow_negative = true);
ReluNetwork random_network(Rng& rng, const NetShape& shape);
std::vector<Rational> random_input(Rng& rng, std::size_t dim, long max_abs_numerator = 8);

// Feed-forward CheLU CRN: every reaction has one or two distinct reactants,
// distinct unit products, and each species is consumed at most once.
Crn random_chelu(Rng& rng, std::size_t max_reactions = 6, std::size_t max_species = 10);

// Random applicable straight-line steps, each a random fraction of the
// reaction's largest nonnegative step. Built without the oracle.
OraclePath random_prefix(const Crn& crn, const State& initial, Rng& rng, std::size_t steps);

// True iff a bijection of species (preserving roles and initial values) maps
// the reaction multiset of `a` onto that of `b`. Rates are ignored.
bool isomorphic(const Crn& a, const Crn& b);

std::string fixture_path(const std::string& name);
std::string read_fixture(const std::string& name);

}  // namespace crnc::testing

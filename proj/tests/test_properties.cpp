#include <doctest.h>

#include <cmath>

#include "crnc/compiler.hpp"
#include "crnc/mass_action.hpp"
#include "crnc/optimizer.hpp"
#include "crnc/oracle.hpp"
#include "generators.hpp"

using namespace crnc;

namespace {

std::vector<Rational> oracle_outputs(const Crn& crn, const std::vector<Rational>& x, const Rational& offset = 0) {
  return decode_outputs(crn, oracle_equilibrium(crn, encode_inputs(crn, x, offset)).state);
}

}  // namespace

TEST_CASE("compiled networks compute forward exactly") {
  testing::Rng rng(91);
  for (int trial = 0; trial < 60; ++trial) {
    testing::NetShape shape;
    shape.binary = trial % 3 == 0;
    const auto net = testing::random_network(rng, shape);
    const Crn crn = compile_network(net);
    for (int sample = 0; sample < 3; ++sample) {
      const auto x = testing::random_input(rng, net.input_dim());
      CHECK(oracle_outputs(crn, x) == forward(net, x));
    }
  }
}

TEST_CASE("both compile paths agree on binary networks") {
  testing::Rng rng(92);
  for (int trial = 0; trial < 30; ++trial) {
    testing::NetShape shape;
    shape.binary = true;
    const auto net = testing::random_network(rng, shape);
    const Crn merged = compile_network(net, {BreluMode::kOn});
    const Crn split = compile_network(net, {BreluMode::kOff});
    const auto x = testing::random_input(rng, net.input_dim());
    CHECK(oracle_outputs(merged, x) == oracle_outputs(split, x));
  }
}

TEST_CASE("adding the same amount to both rails changes nothing") {
  testing::Rng rng(93);
  for (int trial = 0; trial < 30; ++trial) {
    const auto net = testing::random_network(rng, {});
    const Crn crn = compile_network(net);
    const auto x = testing::random_input(rng, net.input_dim());
    const Rational delta = testing::random_rational(rng, 6, false);
    CHECK(oracle_outputs(crn, x, delta) == oracle_outputs(crn, x));
  }
}

TEST_CASE("compiler and optimizer output is non-competitive and composable") {
  testing::Rng rng(94);
  for (int trial = 0; trial < 60; ++trial) {
    testing::NetShape shape;
    shape.binary = trial % 2 == 0;
    const auto net = testing::random_network(rng, shape);
    const Crn crn = compile_network(net);
    const Crn opt = optimize(crn).crn;
    CHECK(check_non_competitive(crn).passed());
    CHECK(check_composable(crn).passed());
    CHECK(check_non_competitive(opt).passed());
    CHECK(check_composable(opt).passed());
  }
}

TEST_CASE("optimization preserves outputs") {
  testing::Rng rng(95);
  for (int trial = 0; trial < 40; ++trial) {
    testing::NetShape shape;
    shape.binary = trial % 2 == 0;
    const auto net = testing::random_network(rng, shape);
    const Crn crn = compile_network(net);
    const Crn opt = optimize(crn).crn;
    const auto x = testing::random_input(rng, net.input_dim());
    CHECK(oracle_outputs(opt, x) == oracle_outputs(crn, x));
  }
}

TEST_CASE("iterated rounds approach the closed loop on compiled networks") {
  testing::Rng rng(96);
  OracleOptions none;
  none.closure = LoopClosure::kNone;
  for (int trial = 0; trial < 20; ++trial) {
    const auto net = testing::random_network(rng, {});
    const Crn crn = compile_network(net);
    const State start = encode_inputs(crn, testing::random_input(rng, net.input_dim()));
    const State exact = oracle_equilibrium(crn, start).state;
    const State iterated = oracle_equilibrium(crn, start, none).state;
    for (SpeciesId s = 0; s < crn.species_count(); ++s) {
      CHECK(std::abs((iterated[s] - exact[s]).to_double()) <= none.loop_epsilon * 10);
    }
  }
}

TEST_CASE("mass-action kinetics settle at the oracle outputs") {
  testing::Rng rng(97);
  for (int trial = 0; trial < 10; ++trial) {
    testing::NetShape shape;
    shape.max_numerator = 3;
    shape.max_layers = 2;
    shape.max_units = 4;
    const auto net = testing::random_network(rng, shape);
    const Crn crn = optimize(compile_network(net)).crn;
    const auto x = testing::random_input(rng, net.input_dim(), 3);
    const auto want = oracle_outputs(crn, x);
    ConvergenceConfig cfg;
    cfg.tol = 1e-5;
    cfg.observe = output_observer(crn);
    const auto settled = simulate_to_convergence(crn, encode_inputs(crn, x).to_doubles(), cfg);
    const auto got = decode_outputs(crn, settled.state);
    for (std::size_t k = 0; k < want.size(); ++k) CHECK(std::abs(got[k] - want[k].to_double()) < 1e-3);
  }
}

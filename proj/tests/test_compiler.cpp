#include <doctest.h>

#include "crnc/compiler.hpp"
#include "crnc/crn_text.hpp"
#include "crnc/errors.hpp"
#include "crnc/oracle.hpp"
#include "generators.hpp"

using namespace crnc;

namespace {

// Value of a.b(c)^inf computed directly from the digit strings.
Rational expansion_value(const BinaryExpansion& e) {
  auto digits = [](const std::string& bits) {
    Rational v(0);
    for (char c : bits) v = v * Rational(2) + Rational(c - '0');
    return v;
  };
  auto two_to = [](std::size_t n) {
    Rational p(1);
    for (std::size_t k = 0; k < n; ++k) p *= Rational(2);
    return p;
  };
  const std::size_t j = e.transient_bits.size();
  const std::size_t k = e.repeating_bits.size();
  Rational v = digits(e.integer_bits) + digits(e.transient_bits) / two_to(j);
  if (k > 0) v += digits(e.repeating_bits) / (two_to(j) * (two_to(k) - Rational(1)));
  return v;
}

// Sets x on a dual-rail value, runs the oracle and returns pos - neg of `out`.
Rational settle(const Crn& crn, const State& initial, const DualRailValue& out) {
  const State end = oracle_equilibrium(crn, initial).state;
  return end[out.pos] - end[out.neg];
}

void set_value(State& s, const DualRailValue& v, const Rational& x) {
  s[v.pos] = x.sign() > 0 ? x : Rational(0);
  s[v.neg] = x.sign() < 0 ? -x : Rational(0);
}

bool well_formed(const Crn& crn) { return check_non_competitive(crn).passed() && check_composable(crn).passed(); }

std::size_t reactions_consuming(const Crn& crn, const std::string& prefix) {
  std::size_t n = 0;
  for (const auto& r : crn.reactions()) {
    for (const auto& t : r.reactants()) {
      if (crn.species(t.species).name.rfind(prefix, 0) == 0) {
        ++n;
        break;
      }
    }
  }
  return n;
}

}  // namespace

TEST_CASE("fan-out copies the input value") {
  Crn crn;
  const auto x = add_dual_rail(crn, "X", RailRole::kInput);
  std::vector<DualRailValue> ys{add_dual_rail(crn, "Y1", RailRole::kOutput), add_dual_rail(crn, "Y2", RailRole::kOutput)};
  emit_fan_out(crn, x, ys);
  CHECK(crn.reaction_count() == 2);
  CHECK(well_formed(crn));
  State s(crn.species_count());
  set_value(s, x, Rational(5));
  CHECK(settle(crn, s, ys[0]) == Rational(5));
  CHECK(settle(crn, s, ys[1]) == Rational(5));
}

TEST_CASE("fan-out keeps both rails") {
  Crn crn;
  const auto x = add_dual_rail(crn, "X", RailRole::kInput);
  std::vector<DualRailValue> ys;
  for (int k = 1; k <= 3; ++k) ys.push_back(add_dual_rail(crn, "Y" + std::to_string(k), RailRole::kOutput));
  emit_fan_out(crn, x, ys);
  State s(crn.species_count());
  s[x.pos] = Rational(3);
  s[x.neg] = Rational(1);
  for (const auto& y : ys) CHECK(settle(crn, s, y) == Rational(2));

  Crn copy;
  const auto a = add_dual_rail(copy, "A", RailRole::kInput);
  const std::vector<DualRailValue> b{add_dual_rail(copy, "B", RailRole::kOutput)};
  emit_fan_out(copy, a, b);
  CHECK(copy.reaction(0) == Reaction({{a.pos, 1}}, {{b[0].pos, 1}}));
  CHECK(copy.reaction(1) == Reaction({{a.neg, 1}}, {{b[0].neg, 1}}));
}

TEST_CASE("binary expansions") {
  CHECK(binary_expansion(Rational(19, 6)) == BinaryExpansion{"11", "0", "01"});
  CHECK(binary_expansion(Rational(1, 2)) == BinaryExpansion{"0", "1", ""});
  CHECK(binary_expansion(Rational(5)) == BinaryExpansion{"101", "", ""});
  CHECK(binary_expansion(Rational(1, 3)) == BinaryExpansion{"0", "", "01"});
  CHECK(binary_expansion(Rational(5, 8)) == BinaryExpansion{"0", "101", ""});
  CHECK_THROWS_AS(binary_expansion(Rational(0)), Error);
  CHECK_THROWS_AS(binary_expansion(Rational(-1, 2)), Error);
}

TEST_CASE("expansions evaluate back to their weight") {
  for (long q = 1; q <= 40; ++q) {
    for (long p = 1; p <= 3 * q; ++p) {
      const Rational w(p, q);
      const auto e = binary_expansion(w);
      CHECK(expansion_value(e) == w);
      CHECK(e.value() == w);
      // A repeating part exists exactly when q is not a power of two.
      const auto den = w.denominator();
      const bool dyadic = (den & (den - 1)) == 0;
      CHECK(e.repeating_bits.empty() == dyadic);
    }
  }
}

TEST_CASE("chain multiplier computes 19/6 x and loops back") {
  Crn crn;
  const auto x = add_dual_rail(crn, "X", RailRole::kInput);
  const auto y = add_dual_rail(crn, "Y", RailRole::kOutput);
  emit_rational_multiplier(crn, x, Rational(19, 6), y);
  CHECK(well_formed(crn));
  // i = 2, j = 1, k = 2 on each rail.
  CHECK(crn.reaction_count() == 2 * (2 + 1 + 2 + 1));
  State s(crn.species_count());
  set_value(s, x, Rational(6));
  CHECK(settle(crn, s, y) == Rational(19));
}

TEST_CASE("chain length per rail is i + j + k + 1") {
  testing::Rng rng(21);
  for (int trial = 0; trial < 60; ++trial) {
    Rational w;
    do w = testing::random_rational(rng, 20); while (w.is_zero());
    Crn crn;
    const auto x = add_dual_rail(crn, "X", RailRole::kInput);
    const auto y = add_dual_rail(crn, "Y", RailRole::kOutput);
    emit_rational_multiplier(crn, x, w, y, MultiplierForm::kChain);
    const auto e = binary_expansion(w.abs());
    const std::size_t per_rail = e.integer_bits.size() + e.transient_bits.size() + e.repeating_bits.size() + 1;
    CHECK(crn.reaction_count() == 2 * per_rail);
    CHECK(well_formed(crn));
    State s(crn.species_count());
    const Rational in = testing::random_rational(rng, 10);
    set_value(s, x, in);
    CHECK(settle(crn, s, y) == w * in);
  }
}

TEST_CASE("compact multiplier forms") {
  Crn one;
  const auto x = add_dual_rail(one, "X", RailRole::kInput);
  const auto y = add_dual_rail(one, "Y", RailRole::kOutput);
  emit_rational_multiplier(one, x, Rational(1), y, MultiplierForm::kCompact);
  REQUIRE(one.reaction_count() == 2);
  CHECK(one.reaction(0) == Reaction({{x.pos, 1}}, {{y.pos, 1}}));

  Crn half;
  const auto hx = add_dual_rail(half, "X", RailRole::kInput);
  const auto hy = add_dual_rail(half, "Y", RailRole::kOutput);
  emit_rational_multiplier(half, hx, Rational(-1, 2), hy, MultiplierForm::kCompact);
  CHECK(half.reaction_count() == 2);
  CHECK(half.reaction(0) == Reaction({{hx.pos, 2}}, {{hy.neg, 1}}));
  State s(half.species_count());
  s[hx.pos] = Rational(4);
  const State end = oracle_equilibrium(half, s).state;
  CHECK(end[hy.neg] == Rational(2));
  CHECK(end[hy.pos] == Rational(0));

  testing::Rng rng(22);
  for (int trial = 0; trial < 60; ++trial) {
    Rational w;
    do w = testing::random_rational(rng, 20); while (w.is_zero());
    Crn crn;
    const auto a = add_dual_rail(crn, "X", RailRole::kInput);
    const auto b = add_dual_rail(crn, "Y", RailRole::kOutput);
    emit_rational_multiplier(crn, a, w, b, MultiplierForm::kCompact);
    CHECK(well_formed(crn));
    State st(crn.species_count());
    const Rational in = testing::random_rational(rng, 10);
    set_value(st, a, in);
    CHECK(settle(crn, st, b) == w * in);
  }
}

TEST_CASE("zero weight multiplier is rejected") {
  Crn crn;
  const auto x = add_dual_rail(crn, "X");
  const auto y = add_dual_rail(crn, "Y");
  CHECK_THROWS_AS(emit_rational_multiplier(crn, x, Rational(0), y), Error);
}

TEST_CASE("weighted sums") {
  Crn crn;
  const auto x1 = add_dual_rail(crn, "X1", RailRole::kInput);
  const auto x2 = add_dual_rail(crn, "X2", RailRole::kInput);
  const auto y = add_dual_rail(crn, "Y", RailRole::kOutput);
  const std::vector<WeightedInput> in{{x1, Rational(1)}, {x2, Rational(-1)}};
  emit_weighted_sum(crn, in, y);
  CHECK(well_formed(crn));
  State s(crn.species_count());
  set_value(s, x1, Rational(3));
  set_value(s, x2, Rational(1));
  CHECK(settle(crn, s, y) == Rational(2));

  Crn out;
  const auto h1 = add_dual_rail(out, "H1", RailRole::kInput);
  const auto h2 = add_dual_rail(out, "H2", RailRole::kInput);
  const auto o = add_dual_rail(out, "Y", RailRole::kOutput);
  const std::vector<WeightedInput> fours{{h1, Rational(4)}, {h2, Rational(4)}};
  emit_weighted_sum(out, fours, o);
  State t(out.species_count());
  set_value(t, h1, Rational(1, 2));
  CHECK(settle(out, t, o) == Rational(2));

  Crn zero;
  const auto z1 = add_dual_rail(zero, "X1", RailRole::kInput);
  const auto z2 = add_dual_rail(zero, "X2", RailRole::kInput);
  const auto zy = add_dual_rail(zero, "Y", RailRole::kOutput);
  const std::vector<WeightedInput> mixed{{z1, Rational(0)}, {z2, Rational(1)}};
  emit_weighted_sum(zero, mixed, zy);
  REQUIRE(zero.reaction_count() == 2);
  CHECK(zero.reaction(0) == Reaction({{z2.pos, 1}}, {{zy.pos, 1}}));

  const std::vector<WeightedInput> none{{z1, Rational(0)}};
  CHECK_THROWS_AS(emit_weighted_sum(zero, none, zy), Error);
}

TEST_CASE("relu fragment") {
  auto run = [](const Rational& pos, const Rational& neg) {
    Crn crn;
    const auto x = add_dual_rail(crn, "X", RailRole::kInput);
    const auto y = add_dual_rail(crn, "Y", RailRole::kOutput);
    const auto m = crn.add_species("M");
    emit_relu(crn, x, y, m);
    CHECK(crn.reaction_count() == 2);
    CHECK(crn.reaction(0).molecularity() == 1);
    CHECK(crn.reaction(1).molecularity() == 2);
    CHECK(well_formed(crn));
    State s(crn.species_count());
    s[x.pos] = pos;
    s[x.neg] = neg;
    const State end = oracle_equilibrium(crn, s).state;
    return std::tuple{end[y.pos], end[y.neg], end[m]};
  };
  CHECK(run(3, 1) == std::tuple{Rational(3), Rational(1), Rational(2)});
  const auto [p, n, m] = run(0, 5);
  CHECK(p - n == Rational(0));
  const auto [p2, n2, m2] = run(2, 2);
  CHECK(p2 - n2 == Rational(0));
  CHECK(m2 == Rational(0));
}

TEST_CASE("min and max fragments") {
  auto run = [](bool is_min, const Rational& a, const Rational& b) {
    Crn crn;
    const auto x1 = add_dual_rail(crn, "X1", RailRole::kInput);
    const auto x2 = add_dual_rail(crn, "X2", RailRole::kInput);
    const auto y = add_dual_rail(crn, "Y", RailRole::kOutput);
    if (is_min) {
      emit_min(crn, x1, x2, y);
    } else {
      emit_max(crn, x1, x2, y);
    }
    CHECK(crn.reaction_count() == 3);
    CHECK(well_formed(crn));
    State s(crn.species_count());
    set_value(s, x1, a);
    set_value(s, x2, b);
    return settle(crn, s, y);
  };
  CHECK(run(true, -2, 3) == Rational(-2));
  CHECK(run(false, 2, 5) == Rational(5));
  CHECK(run(true, Rational(7, 3), Rational(7, 3)) == Rational(7, 3));
  testing::Rng rng(31);
  for (int trial = 0; trial < 40; ++trial) {
    const Rational a = testing::random_rational(rng, 8);
    const Rational b = testing::random_rational(rng, 8);
    CHECK(run(true, a, b) == crnc::min(a, b));
    CHECK(run(false, a, b) == crnc::max(a, b));
  }
}

TEST_CASE("min fragment matches the min circuit fixture") {
  Crn crn;
  const auto a = add_dual_rail(crn, "A", RailRole::kInput);
  const auto b = add_dual_rail(crn, "B", RailRole::kInput);
  const auto y = add_dual_rail(crn, "Y", RailRole::kOutput);
  emit_min(crn, a, b, y);
  CHECK(testing::isomorphic(crn, parse_crn(testing::read_fixture("fig5_min.crn"))));
}

TEST_CASE("max-of-mins compilation") {
  auto eval = [](const Crn& crn, const Rational& x) {
    const std::vector<Rational> in{x};
    return decode_outputs(crn, oracle_equilibrium(crn, encode_inputs(crn, in)).state)[0];
  };
  // max(x, 2x - 1)
  MaxMinSpec spec{1, {{{Rational(1)}, Rational(0)}, {{Rational(2)}, Rational(-1)}}, {{0}, {1}}};
  const Crn crn = compile_pwl(spec);
  CHECK(well_formed(crn));
  CHECK(eval(crn, 0) == Rational(0));
  CHECK(eval(crn, 2) == Rational(3));

  MaxMinSpec single{1, {{{Rational(3)}, Rational(1)}}, {{0}}};
  const Crn lin = compile_pwl(single);
  CHECK(eval(lin, Rational(1, 3)) == Rational(2));

  MaxMinSpec relu{1, {{{Rational(1)}, Rational(0)}, {{Rational(0)}, Rational(0)}}, {{0}, {1}}};
  const Crn r = compile_pwl(relu);
  CHECK(eval(r, -1) == Rational(0));
  CHECK(eval(r, 4) == Rational(4));

  CHECK_THROWS_AS(compile_pwl(MaxMinSpec{1, {{{Rational(1)}, Rational(0)}}, {{}}}), Error);
  CHECK_THROWS_AS(compile_pwl(MaxMinSpec{1, {{{Rational(1)}, Rational(0)}}, {{3}}}), Error);
}

TEST_CASE("random max-of-mins specs match direct evaluation") {
  testing::Rng rng(41);
  for (int trial = 0; trial < 30; ++trial) {
    MaxMinSpec spec;
    spec.input_dim = 1 + rng() % 2;
    const std::size_t pieces = 1 + rng() % 4;
    for (std::size_t j = 0; j < pieces; ++j) {
      AffinePiece p;
      for (std::size_t k = 0; k < spec.input_dim; ++k) p.weights.push_back(testing::random_rational(rng, 4));
      p.bias = testing::random_rational(rng, 4);
      spec.pieces.push_back(p);
    }
    const std::size_t families = 1 + rng() % 3;
    for (std::size_t i = 0; i < families; ++i) {
      std::vector<std::size_t> family;
      const std::size_t size = 1 + rng() % 3;
      for (std::size_t m = 0; m < size; ++m) family.push_back(rng() % pieces);
      spec.families.push_back(family);
    }
    const Crn crn = compile_pwl(spec);
    CHECK(well_formed(crn));
    const auto x = testing::random_input(rng, spec.input_dim, 6);
    std::optional<Rational> want;
    for (const auto& family : spec.families) {
      std::optional<Rational> lo;
      for (std::size_t j : family) {
        Rational v = spec.pieces[j].bias;
        for (std::size_t k = 0; k < spec.input_dim; ++k) v += spec.pieces[j].weights[k] * x[k];
        lo = lo ? crnc::min(*lo, v) : v;
      }
      want = want ? crnc::max(*want, *lo) : *lo;
    }
    const auto got = decode_outputs(crn, oracle_equilibrium(crn, encode_inputs(crn, x)).state);
    CHECK(got[0] == *want);
  }
}

TEST_CASE("xnor compiles to the reference listing") {
  const auto net = parse_network(testing::read_fixture("xnor.json"));
  const Crn crn = compile_network(net);
  CHECK(crn.reaction_count() == 26);
  CHECK(crn.initial()[crn.id("I_1_1-")] == Rational(3, 2));
  CHECK(crn.initial()[crn.id("I_1_2+")] == Rational(1, 2));
  CHECK(crn.initial()[crn.id("I_2_1-")] == Rational(1));
  CHECK(testing::isomorphic(crn, parse_crn(testing::read_fixture("si_fig10.crn"))));
  CHECK(well_formed(crn));
}

TEST_CASE("binary networks take the merged path") {
  const auto net = parse_network(testing::read_fixture("brelu_221.json"));
  const Crn merged = compile_network(net);
  CHECK(testing::isomorphic(merged, parse_crn(testing::read_fixture("si_fig12b.crn"))));
  const auto& first = merged.reaction(0);
  CHECK(format_reaction(merged, first) == "X1+ -> I_1_1+ + I_1_2-");
  const Crn split = compile_network(net, {BreluMode::kOff});
  CHECK(split.reaction_count() > merged.reaction_count());
  CHECK_THROWS_AS(compile_network(parse_network(testing::read_fixture("xnor.json")), {BreluMode::kOn}), Error);
}

TEST_CASE("one-unit identity network") {
  const ReluNetwork net(1, {Layer{{{Rational(1)}}, {Rational(0)}, true}});
  const Crn crn = compile_network(net, {BreluMode::kOff});
  // Fan-out, rename, ReLU pair.
  CHECK(crn.reaction_count() == 6);
  CHECK(well_formed(crn));
}

TEST_CASE("zero-weight edges emit no reactions") {
  const ReluNetwork with_zero(2, {Layer{{{Rational(3, 2), Rational(0)}}, {Rational(0)}, true}});
  const Crn crn = compile_network(with_zero);
  CHECK(reactions_consuming(crn, "X2") == 0);
  CHECK(reactions_consuming(crn, "X1") == 2);
}

TEST_CASE("dual-rail encoding") {
  const auto net = parse_network(testing::read_fixture("xnor.json"));
  const Crn crn = compile_network(net);
  const std::vector<Rational> x{Rational(-2), Rational(3)};
  const State s = encode_inputs(crn, x, Rational(1));
  CHECK(s[crn.id("X1+")] == Rational(1));
  CHECK(s[crn.id("X1-")] == Rational(3));
  CHECK(s[crn.id("X2+")] == Rational(4));
  CHECK(s[crn.id("I_1_1-")] == Rational(3, 2));
  const std::vector<Rational> wrong{Rational(1)};
  CHECK_THROWS_AS(encode_inputs(crn, wrong), DimensionMismatch);
  const auto iface = dual_rail_interface(crn);
  CHECK(iface.inputs.size() == 2);
  REQUIRE(iface.outputs.size() == 1);
  CHECK(iface.outputs[0].base == "Y");
}

#include "crnc/compiler.hpp"

#include <optional>

#include "crnc/errors.hpp"

namespace crnc {

namespace {

std::string rail_tag(bool positive) { return positive ? "+" : "-"; }

std::string strip_rail(const std::string& name) {
  if (!name.empty() && (name.back() == '+' || name.back() == '-')) return name.substr(0, name.size() - 1);
  return name;
}

Rational pow2(std::size_t e) {
  mpz_class p = 1;
  p <<= static_cast<mp_bitcnt_t>(e);
  return Rational(mpq_class(p));
}

Rational bits_value(const std::string& bits) {
  Rational v(0);
  for (char c : bits) v = v * Rational(2) + Rational(c == '1' ? 1 : 0);
  return v;
}

std::string chain_species(const std::string& base, char kind, std::size_t index, bool positive) {
  return base + "_" + kind + std::to_string(index) + rail_tag(positive);
}

// Halving steps R_s + R_s -> R_{s+1} (+ Y on a 1 bit). The last step loops
// back to R_j when the expansion repeats. `r0` is the chain's entry species.
void emit_halving_chain(Crn& crn, SpeciesId r0, const std::string& base, bool positive, const BinaryExpansion& e,
                        SpeciesId out) {
  const std::string frac = e.transient_bits + e.repeating_bits;
  const std::size_t j = e.transient_bits.size();
  std::vector<SpeciesId> r{r0};
  for (std::size_t s = 1; s < frac.size(); ++s) r.push_back(crn.add_species(chain_species(base, 'R', s, positive)));
  for (std::size_t s = 0; s < frac.size(); ++s) {
    std::vector<Term> products;
    if (s + 1 < frac.size()) {
      products.push_back({r[s + 1], 1});
    } else if (!e.repeating_bits.empty()) {
      products.push_back({r[j], 1});
    }
    if (frac[s] == '1') products.push_back({out, 1});
    crn.add_reaction(Reaction({{r[s], 2}}, std::move(products)));
  }
}

// X -> L0 + R0, then L_r -> 2 L_{r+1} (+ Y for bit 2^r), then the halving chain.
void emit_chain_rail(Crn& crn, SpeciesId in, SpeciesId out, const std::string& base, bool positive,
                     const BinaryExpansion& e) {
  const bool has_fraction = !(e.transient_bits.empty() && e.repeating_bits.empty());
  const std::size_t i = e.integer_bits.size();
  std::vector<SpeciesId> l;
  for (std::size_t r = 0; r < i; ++r) l.push_back(crn.add_species(chain_species(base, 'L', r, positive)));
  std::optional<SpeciesId> r0;
  if (has_fraction) r0 = crn.add_species(chain_species(base, 'R', 0, positive));

  std::vector<Term> split{{l[0], 1}};
  if (r0) split.push_back({*r0, 1});
  crn.add_reaction(Reaction({{in, 1}}, std::move(split)));
  for (std::size_t r = 0; r < i; ++r) {
    std::vector<Term> products;
    if (r + 1 < i) products.push_back({l[r + 1], 2});
    if (e.integer_bits[i - 1 - r] == '1') products.push_back({out, 1});
    crn.add_reaction(Reaction({{l[r], 1}}, std::move(products)));
  }
  if (r0) emit_halving_chain(crn, *r0, base, positive, e, out);
}

void emit_compact_rail(Crn& crn, SpeciesId in, SpeciesId out, const std::string& base, bool positive,
                       const BinaryExpansion& e, const Rational& integer_part) {
  const bool has_fraction = !(e.transient_bits.empty() && e.repeating_bits.empty());
  if (!has_fraction) {
    crn.add_reaction(Reaction({{in, 1}}, {{out, integer_part.numerator().get_si()}}));
    return;
  }
  // The input itself can enter the halving chain unless the loop would feed back into it.
  if (integer_part.is_zero() && !e.transient_bits.empty()) {
    emit_halving_chain(crn, in, base, positive, e, out);
    return;
  }
  const SpeciesId r0 = crn.add_species(chain_species(base, 'R', 0, positive));
  std::vector<Term> products;
  if (!integer_part.is_zero()) products.push_back({out, integer_part.numerator().get_si()});
  products.push_back({r0, 1});
  crn.add_reaction(Reaction({{in, 1}}, std::move(products)));
  emit_halving_chain(crn, r0, base, positive, e, out);
}

}  // namespace

DualRailValue add_dual_rail(Crn& crn, const std::string& base, RailRole role) {
  Role pos = Role::kInternal;
  Role neg = Role::kInternal;
  if (role == RailRole::kInput) {
    pos = Role::kInputPos;
    neg = Role::kInputNeg;
  } else if (role == RailRole::kOutput) {
    pos = Role::kOutputPos;
    neg = Role::kOutputNeg;
  }
  const SpeciesId p = crn.add_species(base + "+", pos);
  const SpeciesId n = crn.add_species(base + "-", neg);
  return DualRailValue{base, p, n};
}

Rational BinaryExpansion::value() const {
  Rational v = bits_value(integer_bits);
  const std::size_t j = transient_bits.size();
  const std::size_t k = repeating_bits.size();
  v += bits_value(transient_bits) / pow2(j);
  if (k > 0) v += bits_value(repeating_bits) / (pow2(j) * (pow2(k) - Rational(1)));
  return v;
}

BinaryExpansion binary_expansion(const Rational& w) {
  if (w.sign() <= 0) throw Error("binary expansion requires a positive weight, got " + w.to_string());
  BinaryExpansion e;
  const Rational whole = w.floor();
  mpz_class a = whole.numerator();
  e.integer_bits = a == 0 ? std::string("0") : a.get_str(2);

  // Long division of the fractional part; the first repeated remainder fixes
  // the minimal transient length and period.
  const mpz_class q = w.denominator();
  mpz_class rem = (w - whole).numerator() * (q / (w - whole).denominator());
  std::vector<mpz_class> seen;
  std::string bits;
  while (rem != 0) {
    for (std::size_t idx = 0; idx < seen.size(); ++idx) {
      if (seen[idx] == rem) {
        e.transient_bits = bits.substr(0, idx);
        e.repeating_bits = bits.substr(idx);
        return e;
      }
    }
    seen.push_back(rem);
    rem *= 2;
    if (rem >= q) {
      bits.push_back('1');
      rem -= q;
    } else {
      bits.push_back('0');
    }
  }
  e.transient_bits = bits;
  return e;
}

void emit_fan_out(Crn& crn, const DualRailValue& input, std::span<const DualRailValue> outputs) {
  if (outputs.empty()) return;
  std::vector<Term> pos;
  std::vector<Term> neg;
  for (const auto& o : outputs) {
    pos.push_back({o.pos, 1});
    neg.push_back({o.neg, 1});
  }
  crn.add_reaction(Reaction({{input.pos, 1}}, std::move(pos)));
  crn.add_reaction(Reaction({{input.neg, 1}}, std::move(neg)));
}

void emit_rational_multiplier(Crn& crn, const DualRailValue& input, const Rational& w, const DualRailValue& output,
                              MultiplierForm form) {
  if (w.is_zero()) throw Error("rational multiplier with zero weight");
  const Rational magnitude = w.abs();
  const BinaryExpansion e = binary_expansion(magnitude);
  const bool flip = w.sign() < 0;
  for (bool positive : {true, false}) {
    const SpeciesId in = positive ? input.pos : input.neg;
    const SpeciesId out = (positive != flip) ? output.pos : output.neg;
    if (form == MultiplierForm::kChain) {
      emit_chain_rail(crn, in, out, input.base, positive, e);
    } else {
      emit_compact_rail(crn, in, out, input.base, positive, e, magnitude.floor());
    }
  }
}

void emit_weighted_sum(Crn& crn, std::span<const WeightedInput> inputs, const DualRailValue& output) {
  bool any = false;
  for (const auto& in : inputs) {
    if (in.weight.is_zero()) continue;
    any = true;
    emit_rational_multiplier(crn, in.value, in.weight, output, MultiplierForm::kCompact);
  }
  if (!any) throw Error("weighted sum with all weights zero");
}

void emit_relu(Crn& crn, const DualRailValue& input, const DualRailValue& output, SpeciesId helper) {
  crn.add_reaction(Reaction({{input.pos, 1}}, {{helper, 1}, {output.pos, 1}}));
  crn.add_reaction(Reaction({{helper, 1}, {input.neg, 1}}, {{output.neg, 1}}));
}

void emit_min(Crn& crn, const DualRailValue& a, const DualRailValue& b, const DualRailValue& output) {
  crn.add_reaction(Reaction({{a.neg, 1}}, {{b.pos, 1}, {output.neg, 1}}));
  crn.add_reaction(Reaction({{b.neg, 1}}, {{a.pos, 1}, {output.neg, 1}}));
  crn.add_reaction(Reaction({{a.pos, 1}, {b.pos, 1}}, {{output.pos, 1}}));
}

void emit_max(Crn& crn, const DualRailValue& a, const DualRailValue& b, const DualRailValue& output) {
  crn.add_reaction(Reaction({{a.pos, 1}}, {{b.neg, 1}, {output.pos, 1}}));
  crn.add_reaction(Reaction({{b.pos, 1}}, {{a.neg, 1}, {output.pos, 1}}));
  crn.add_reaction(Reaction({{a.neg, 1}, {b.neg, 1}}, {{output.neg, 1}}));
}

namespace {

void set_bias(Crn& crn, const DualRailValue& target, const Rational& bias) {
  if (bias.sign() > 0) crn.add_initial(target.pos, bias);
  if (bias.sign() < 0) crn.add_initial(target.neg, -bias);
}

}  // namespace

Crn compile_pwl(const MaxMinSpec& spec) {
  if (spec.input_dim == 0) throw Error("max-min spec needs at least one input");
  if (spec.families.empty()) throw Error("max-min spec has no families");
  std::vector<std::size_t> uses(spec.pieces.size(), 0);
  for (const auto& family : spec.families) {
    if (family.empty()) throw Error("max-min spec has an empty family");
    for (std::size_t j : family) {
      if (j >= spec.pieces.size()) throw Error("family references unknown piece " + std::to_string(j));
      ++uses[j];
    }
  }
  for (const auto& piece : spec.pieces) {
    if (piece.weights.size() != spec.input_dim) throw DimensionMismatch("affine piece width differs from input_dim");
  }

  Crn crn;
  std::vector<DualRailValue> inputs;
  for (std::size_t k = 0; k < spec.input_dim; ++k) inputs.push_back(add_dual_rail(crn, naming::input(k + 1), RailRole::kInput));

  const bool single_piece = spec.families.size() == 1 && spec.families[0].size() == 1;
  std::vector<std::optional<DualRailValue>> piece_value(spec.pieces.size());
  for (std::size_t j = 0; j < spec.pieces.size(); ++j) {
    if (uses[j] == 0) continue;
    piece_value[j] = single_piece ? add_dual_rail(crn, "Y", RailRole::kOutput)
                                  : add_dual_rail(crn, "P_" + std::to_string(j + 1));
  }

  // Inputs fan out to one dedicated copy per (piece, input) edge.
  std::vector<std::vector<WeightedInput>> terms(spec.pieces.size());
  for (std::size_t k = 0; k < spec.input_dim; ++k) {
    std::vector<DualRailValue> copies;
    for (std::size_t j = 0; j < spec.pieces.size(); ++j) {
      if (uses[j] == 0 || spec.pieces[j].weights[k].is_zero()) continue;
      copies.push_back(add_dual_rail(crn, "PF_" + std::to_string(j + 1) + "_" + std::to_string(k + 1)));
      terms[j].push_back({copies.back(), spec.pieces[j].weights[k]});
    }
    emit_fan_out(crn, inputs[k], copies);
  }
  for (std::size_t j = 0; j < spec.pieces.size(); ++j) {
    if (uses[j] == 0) continue;
    if (!terms[j].empty()) emit_weighted_sum(crn, terms[j], *piece_value[j]);
    set_bias(crn, *piece_value[j], spec.pieces[j].bias);
  }
  if (single_piece) return crn;

  // Each use of a piece consumes its own copy.
  std::vector<std::vector<DualRailValue>> copies(spec.pieces.size());
  for (std::size_t j = 0; j < spec.pieces.size(); ++j) {
    if (uses[j] == 0) continue;
    if (uses[j] == 1) {
      copies[j].push_back(*piece_value[j]);
      continue;
    }
    for (std::size_t c = 0; c < uses[j]; ++c) {
      copies[j].push_back(add_dual_rail(crn, "PC_" + std::to_string(j + 1) + "_" + std::to_string(c + 1)));
    }
    emit_fan_out(crn, *piece_value[j], copies[j]);
  }
  std::vector<std::size_t> next_copy(spec.pieces.size(), 0);

  const std::size_t families = spec.families.size();
  std::optional<DualRailValue> result;
  for (std::size_t i = 0; i < families; ++i) {
    const auto& family = spec.families[i];
    DualRailValue acc = copies[family[0]][next_copy[family[0]]++];
    for (std::size_t m = 1; m < family.size(); ++m) {
      const DualRailValue& rhs = copies[family[m]][next_copy[family[m]]++];
      const bool final = families == 1 && m + 1 == family.size();
      DualRailValue out = final ? add_dual_rail(crn, "Y", RailRole::kOutput)
                                : add_dual_rail(crn, "G_" + std::to_string(i + 1) + "_" + std::to_string(m));
      emit_min(crn, acc, rhs, out);
      acc = out;
    }
    if (!result) {
      result = acc;
      continue;
    }
    const bool final = i + 1 == families;
    DualRailValue out = final ? add_dual_rail(crn, "Y", RailRole::kOutput)
                              : add_dual_rail(crn, "K_" + std::to_string(i));
    emit_max(crn, *result, acc, out);
    result = out;
  }
  return crn;
}

namespace naming {

std::string input(std::size_t k) { return "X" + std::to_string(k); }
std::string fan_out(std::size_t layer, std::size_t source, std::size_t target) {
  return "F_" + std::to_string(layer) + "_" + std::to_string(source) + "_" + std::to_string(target);
}
std::string sum(std::size_t layer, std::size_t unit) { return "I_" + std::to_string(layer) + "_" + std::to_string(unit); }
std::string helper(std::size_t layer, std::size_t unit) { return "M_" + std::to_string(layer) + "_" + std::to_string(unit); }
std::string activation(std::size_t layer, std::size_t unit) {
  return "H_" + std::to_string(layer) + "_" + std::to_string(unit);
}
std::string output(std::size_t unit, std::size_t output_count) {
  return output_count == 1 ? std::string("Y") : "Y_" + std::to_string(unit);
}

}  // namespace naming

Crn compile_network(const ReluNetwork& net, const CompileOptions& options) {
  const bool binary = classify_binary(net).is_binary;
  if (options.brelu == BreluMode::kOn && !binary) {
    throw Error("merged fan-out requested but the network has weights outside {-1, 0, 1}");
  }
  const bool merged = binary && options.brelu != BreluMode::kOff;

  Crn crn;
  std::vector<DualRailValue> sources;
  for (std::size_t k = 1; k <= net.input_dim(); ++k) sources.push_back(add_dual_rail(crn, naming::input(k), RailRole::kInput));

  const std::size_t depth = net.layers().size();
  const std::size_t outputs = net.output_dim();
  for (std::size_t l = 1; l <= depth; ++l) {
    const Layer& layer = net.layers()[l - 1];
    const bool last = l == depth;
    std::vector<DualRailValue> sums;
    for (std::size_t u = 1; u <= layer.units(); ++u) {
      sums.push_back(last && !layer.relu ? add_dual_rail(crn, naming::output(u, outputs), RailRole::kOutput)
                                         : add_dual_rail(crn, naming::sum(l, u)));
    }

    if (merged) {
      // +1 edges copy rails straight into the unit's sum, -1 edges cross them.
      for (std::size_t k = 0; k < sources.size(); ++k) {
        std::vector<Term> pos;
        std::vector<Term> neg;
        for (std::size_t u = 0; u < layer.units(); ++u) {
          const int sign = layer.weights[u][k].sign();
          if (sign == 0) continue;
          pos.push_back({sign > 0 ? sums[u].pos : sums[u].neg, 1});
          neg.push_back({sign > 0 ? sums[u].neg : sums[u].pos, 1});
        }
        if (pos.empty()) continue;
        crn.add_reaction(Reaction({{sources[k].pos, 1}}, std::move(pos)));
        crn.add_reaction(Reaction({{sources[k].neg, 1}}, std::move(neg)));
      }
    } else {
      std::vector<std::vector<std::pair<DualRailValue, std::size_t>>> edges(sources.size());
      for (std::size_t k = 0; k < sources.size(); ++k) {
        std::vector<DualRailValue> copies;
        for (std::size_t u = 0; u < layer.units(); ++u) {
          if (layer.weights[u][k].is_zero()) continue;
          copies.push_back(add_dual_rail(crn, naming::fan_out(l, k + 1, u + 1)));
          edges[k].emplace_back(copies.back(), u);
        }
        emit_fan_out(crn, sources[k], copies);
      }
      for (std::size_t k = 0; k < sources.size(); ++k) {
        for (const auto& [copy, u] : edges[k]) {
          emit_rational_multiplier(crn, copy, layer.weights[u][k], sums[u], MultiplierForm::kCompact);
        }
      }
    }
    for (std::size_t u = 0; u < layer.units(); ++u) set_bias(crn, sums[u], layer.biases[u]);

    if (!layer.relu) {
      sources = std::move(sums);
      continue;
    }
    std::vector<DualRailValue> acts;
    for (std::size_t u = 1; u <= layer.units(); ++u) {
      const SpeciesId m = crn.add_species(naming::helper(l, u));
      acts.push_back(last ? add_dual_rail(crn, naming::output(u, outputs), RailRole::kOutput)
                          : add_dual_rail(crn, naming::activation(l, u)));
      emit_relu(crn, sums[u - 1], acts.back(), m);
    }
    sources = std::move(acts);
  }
  return crn;
}

DualRailInterface dual_rail_interface(const Crn& crn) {
  DualRailInterface iface;
  for (SpeciesId s = 0; s < crn.species_count(); ++s) {
    const Species& sp = crn.species(s);
    if (sp.role != Role::kInputPos && sp.role != Role::kOutputPos) continue;
    const std::string base = strip_rail(sp.name);
    const auto neg = crn.find(base + "-");
    const Role want = sp.role == Role::kInputPos ? Role::kInputNeg : Role::kOutputNeg;
    if (!neg || crn.species(*neg).role != want) {
      throw Error("species '" + sp.name + "' has no matching negative rail '" + base + "-'");
    }
    (sp.role == Role::kInputPos ? iface.inputs : iface.outputs).push_back(DualRailValue{base, s, *neg});
  }
  return iface;
}

State encode_inputs(const Crn& crn, std::span<const Rational> x, const Rational& offset) {
  const auto iface = dual_rail_interface(crn);
  if (x.size() != iface.inputs.size()) {
    throw DimensionMismatch("got " + std::to_string(x.size()) + " inputs, CRN has " +
                            std::to_string(iface.inputs.size()));
  }
  if (offset.sign() < 0) throw Error("dual-rail offset must be nonnegative");
  State state = crn.initial();
  for (std::size_t k = 0; k < x.size(); ++k) {
    const DualRailValue& in = iface.inputs[k];
    state[in.pos] += offset + (x[k].sign() > 0 ? x[k] : Rational(0));
    state[in.neg] += offset + (x[k].sign() < 0 ? -x[k] : Rational(0));
  }
  return state;
}

std::vector<Rational> decode_outputs(const Crn& crn, const State& state) {
  std::vector<Rational> out;
  for (const auto& o : dual_rail_interface(crn).outputs) out.push_back(state[o.pos] - state[o.neg]);
  return out;
}

std::vector<double> decode_outputs(const Crn& crn, std::span<const double> state) {
  std::vector<double> out;
  for (const auto& o : dual_rail_interface(crn).outputs) out.push_back(state[o.pos] - state[o.neg]);
  return out;
}

std::function<std::vector<double>(const std::vector<double>&)> output_observer(const Crn& crn) {
  std::vector<std::pair<SpeciesId, SpeciesId>> rails;
  for (const auto& o : dual_rail_interface(crn).outputs) rails.emplace_back(o.pos, o.neg);
  return [rails](const std::vector<double>& state) {
    std::vector<double> out;
    out.reserve(rails.size());
    for (const auto& [p, n] : rails) out.push_back(state[p] - state[n]);
    return out;
  };
}

}  // namespace crnc

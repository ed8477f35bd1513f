#include "crnc/chelu.hpp"

#include <json.hpp>
#include <random>
#include <set>

#include "crnc/errors.hpp"
#include "crnc/oracle.hpp"

namespace crnc {

std::string_view chelu_rule_name(CheluRule rule) {
  switch (rule) {
    case CheluRule::kAtMostTwoReactants:
      return "at-most-two-reactants";
    case CheluRule::kFeedForward:
      return "feed-forward";
    case CheluRule::kUnitStoichiometry:
      return "unit-stoichiometry";
    case CheluRule::kNonCompetitive:
      return "non-competitive";
  }
  return "unknown";
}

CheluCheck check_chelu(const Crn& crn) {
  auto label = [](ReactionId j) { return "reaction " + std::to_string(j + 1); };
  for (ReactionId j = 0; j < crn.reaction_count(); ++j) {
    if (crn.reaction(j).molecularity() > 2) {
      return CheluViolation{CheluRule::kAtMostTwoReactants, {j}, std::nullopt, label(j) + " has more than two reactants"};
    }
  }
  auto ff = check_feed_forward(crn);
  if (!ff.ok()) {
    std::string msg = "reactions form a cycle:";
    for (ReactionId j : ff.cycle) msg += " " + std::to_string(j + 1);
    return CheluViolation{CheluRule::kFeedForward, ff.cycle, std::nullopt, msg};
  }
  for (ReactionId j = 0; j < crn.reaction_count(); ++j) {
    const Reaction& r = crn.reaction(j);
    std::set<SpeciesId> seen;
    for (const auto* side : {&r.reactants(), &r.products()}) {
      for (const auto& t : *side) {
        if (t.coeff != 1 || !seen.insert(t.species).second) {
          return CheluViolation{CheluRule::kUnitStoichiometry, {j}, t.species,
                                "species " + crn.species(t.species).name + " appears more than once in " + label(j)};
        }
      }
    }
  }
  const auto nc = check_non_competitive(crn);
  if (!nc.passed()) {
    const auto& v = nc.violations.front();
    return CheluViolation{CheluRule::kNonCompetitive, v.reactions, v.species, v.message};
  }
  CheluCert cert;
  cert.ordering = std::move(*ff.ordering);
  for (const auto& r : crn.reactions()) cert.arity.push_back(static_cast<int>(r.molecularity()));
  return cert;
}

namespace {

std::vector<Rational> unit_row(std::size_t n, std::size_t k) {
  std::vector<Rational> row(n);
  row[k] = Rational(1);
  return row;
}

Layer identity_layer(std::size_t n, bool relu) {
  Layer layer;
  layer.relu = relu;
  for (std::size_t k = 0; k < n; ++k) layer.weights.push_back(unit_row(n, k));
  layer.biases.assign(n, Rational(0));
  return layer;
}

}  // namespace

ReluNetwork translate_to_brelu(const Crn& crn, const CheluCert& cert) {
  const std::size_t n = crn.species_count();
  if (n == 0) throw Error("cannot translate a CRN with no species");
  if (cert.ordering.size() != crn.reaction_count()) throw Error("certificate does not match the CRN");
  std::vector<Layer> layers;
  for (ReactionId j : cert.ordering) {
    if (j >= crn.reaction_count()) throw Error("certificate names an unknown reaction");
    const Reaction& r = crn.reaction(j);
    if (r.molecularity() == 1) {
      const SpeciesId a = r.reactants()[0].species;
      Layer layer = identity_layer(n, false);
      layer.weights[a][a] = Rational(0);
      for (const auto& p : r.products()) layer.weights[p.species][a] += Rational(1);
      layers.push_back(std::move(layer));
      continue;
    }
    if (r.molecularity() != 2 || r.reactants().size() != 2) throw Error("reaction is not a CheLU reaction");
    const SpeciesId a = r.reactants()[0].species;
    const SpeciesId b = r.reactants()[1].species;

    // Units 0..n-1 pass species through; unit n is h = ReLU(a - b).
    Layer gadget = identity_layer(n, true);
    std::vector<Rational> h(n);
    h[a] = Rational(1);
    h[b] = Rational(-1);
    gadget.weights.push_back(std::move(h));
    gadget.biases.emplace_back(0);

    Layer combine;
    combine.relu = false;
    for (std::size_t k = 0; k < n; ++k) {
      std::vector<Rational> row(n + 1);
      if (k != a) row[k] = Rational(1);
      combine.weights.push_back(std::move(row));
    }
    combine.weights[a][n] = Rational(1);
    combine.weights[b][a] = Rational(-1);
    combine.weights[b][n] = Rational(1);
    for (const auto& p : r.products()) {
      combine.weights[p.species][a] += Rational(1);
      combine.weights[p.species][n] -= Rational(1);
    }
    combine.biases.assign(n, Rational(0));
    layers.push_back(std::move(gadget));
    layers.push_back(std::move(combine));
  }
  if (layers.empty()) layers.push_back(identity_layer(n, false));
  return ReluNetwork(n, std::move(layers));
}

std::size_t relu_node_count(const ReluNetwork& net) {
  std::size_t count = 0;
  for (const auto& layer : net.layers()) {
    if (!layer.relu) continue;
    for (std::size_t u = 0; u < layer.units(); ++u) {
      std::size_t ones = 0;
      bool other = !layer.biases[u].is_zero();
      for (const auto& w : layer.weights[u]) {
        if (w == Rational(1)) {
          ++ones;
        } else if (!w.is_zero()) {
          other = true;
        }
      }
      if (other || ones != 1) ++count;
    }
  }
  return count;
}

std::string SimulationReport::to_json() const {
  nlohmann::json bad = nlohmann::json::array();
  for (const auto& row : mismatched_inputs) {
    nlohmann::json jr = nlohmann::json::array();
    for (const auto& v : row) jr.push_back(v.to_string());
    bad.push_back(std::move(jr));
  }
  nlohmann::json doc{{"trials", trials},
                     {"mismatches", mismatches},
                     {"max_abs_error", max_abs_error.to_string()},
                     {"mismatched_inputs", std::move(bad)}};
  return doc.dump(2) + "\n";
}

SimulationReport verify_simulation(const Crn& crn, const ReluNetwork& net, std::size_t trials, std::uint64_t seed) {
  if (net.input_dim() != crn.species_count() || net.output_dim() != crn.species_count()) {
    throw DimensionMismatch("network width differs from the CRN's species count");
  }
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<long> numerator(0, 40);
  std::uniform_int_distribution<long> denominator(1, 8);
  std::bernoulli_distribution zero(0.2);
  SimulationReport report;
  report.trials = trials;
  for (std::size_t t = 0; t < trials; ++t) {
    State state(crn.species_count());
    for (SpeciesId s = 0; s < crn.species_count(); ++s) {
      if (!zero(rng)) state[s] = Rational(numerator(rng), denominator(rng));
    }
    const auto expected = oracle_equilibrium(crn, state).state;
    const auto got = forward(net, state.values());
    bool mismatch = false;
    for (SpeciesId s = 0; s < crn.species_count(); ++s) {
      const Rational err = (got[s] - expected[s]).abs();
      if (err > report.max_abs_error) report.max_abs_error = err;
      mismatch = mismatch || !err.is_zero();
    }
    if (mismatch) {
      ++report.mismatches;
      if (report.mismatched_inputs.size() < 5) report.mismatched_inputs.push_back(state.values());
    }
  }
  return report;
}

}  // namespace crnc

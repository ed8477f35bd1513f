#include "crnc/optimizer.hpp"

#include <algorithm>
#include <json.hpp>
#include <optional>

#include "crnc/errors.hpp"

namespace crnc {

namespace {

bool eligible(const Crn& crn, ReactionId j) {
  const Reaction& r = crn.reaction(j);
  if (r.reactants().size() != 1 || r.reactants()[0].coeff != 1) return false;
  const SpeciesId s = r.reactants()[0].species;
  if (crn.species(s).role != Role::kInternal) return false;
  if (r.product_coeff(s) > 0) return false;
  for (ReactionId k = 0; k < crn.reaction_count(); ++k) {
    if (k != j && crn.reaction(k).reactant_coeff(s) > 0) return false;
  }
  return true;
}

// Rebuilds the CRN without reaction `j` and its reactant, inlining its products.
Crn eliminate(const Crn& crn, ReactionId j, std::int64_t ceiling) {
  const Reaction& removed = crn.reaction(j);
  const SpeciesId s = removed.reactants()[0].species;

  std::vector<SpeciesId> remap(crn.species_count());
  Crn out;
  for (SpeciesId k = 0; k < crn.species_count(); ++k) {
    if (k == s) continue;
    remap[k] = out.add_species(crn.species(k).name, crn.species(k).role);
  }
  for (SpeciesId k = 0; k < crn.species_count(); ++k) {
    if (k != s && !crn.initial()[k].is_zero()) out.set_initial(remap[k], crn.initial()[k]);
  }
  const Rational folded = crn.initial()[s];
  if (!folded.is_zero()) {
    for (const auto& p : removed.products()) out.add_initial(remap[p.species], folded * Rational(p.coeff));
  }

  for (ReactionId k = 0; k < crn.reaction_count(); ++k) {
    if (k == j) continue;
    const Reaction& r = crn.reaction(k);
    std::vector<Term> reactants;
    for (const auto& t : r.reactants()) reactants.push_back({remap[t.species], t.coeff});
    std::vector<Term> products;
    for (const auto& t : r.products()) {
      if (t.species != s) {
        products.push_back({remap[t.species], t.coeff});
        continue;
      }
      for (const auto& p : removed.products()) products.push_back({remap[p.species], p.coeff * t.coeff});
    }
    Reaction rewritten(std::move(reactants), std::move(products), r.rate());
    if (rewritten.product_count() > ceiling) {
      throw Error("eliminating " + crn.species(s).name + " gives a reaction with " +
                  std::to_string(rewritten.product_count()) + " products, above the ceiling of " +
                  std::to_string(ceiling));
    }
    out.add_reaction(std::move(rewritten));
  }
  return out;
}

// Latest eligible reaction in the feed-forward witness, else the first declared.
std::optional<ReactionId> pick(const Crn& crn, bool& used_order) {
  const auto ff = check_feed_forward(crn);
  if (ff.ok()) {
    const auto& order = *ff.ordering;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      if (eligible(crn, *it)) {
        used_order = true;
        return *it;
      }
    }
    return std::nullopt;
  }
  for (ReactionId j = 0; j < crn.reaction_count(); ++j) {
    if (eligible(crn, j)) return j;
  }
  return std::nullopt;
}

}  // namespace

OptimizeResult optimize(const Crn& crn, const OptimizeOptions& options) {
  const auto nc = check_non_competitive(crn);
  if (!nc.passed()) throw NotNonCompetitive(nc.violations.front().message);
  OptimizeResult result{crn, {}, false};
  while (auto j = pick(result.crn, result.feed_forward_order)) {
    const std::string name = result.crn.species(result.crn.reaction(*j).reactants()[0].species).name;
    result.crn = eliminate(result.crn, *j, options.product_ceiling);
    result.eliminated.push_back(name);
    if (options.on_step) options.on_step(result.crn, name);
  }
  return result;
}

Crn eliminate_unimolecular(const Crn& crn, const OptimizeOptions& options) { return optimize(crn, options).crn; }

CrnCounts count_crn(const Crn& crn) {
  CrnCounts c;
  c.reactions = crn.reaction_count();
  c.species = crn.species_count();
  for (const auto& r : crn.reactions()) {
    if (r.molecularity() == 1) ++c.unimolecular;
    if (r.molecularity() == 2) ++c.bimolecular;
    c.max_products = std::max(c.max_products, r.product_count());
  }
  return c;
}

OptimizationReport count_report(const Crn& before, const Crn& after) {
  OptimizationReport report;
  report.before = count_crn(before);
  report.after = count_crn(after);
  if (report.before.max_products > 0) {
    report.product_growth =
        static_cast<double>(report.after.max_products) / static_cast<double>(report.before.max_products);
  }
  report.order_note =
      "equilibria do not depend on elimination order; the CRN text can, and reverse feed-forward order is used "
      "when a witness exists";
  return report;
}

std::string OptimizationReport::to_json() const {
  auto counts = [](const CrnCounts& c) {
    return nlohmann::json{{"reactions", c.reactions},
                          {"species", c.species},
                          {"unimolecular", c.unimolecular},
                          {"bimolecular", c.bimolecular},
                          {"max_products", c.max_products}};
  };
  nlohmann::json doc{{"before", counts(before)},
                     {"after", counts(after)},
                     {"product_growth", product_growth},
                     {"order_note", order_note}};
  return doc.dump(2) + "\n";
}

}  // namespace crnc

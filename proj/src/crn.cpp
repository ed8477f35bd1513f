#include "crnc/crn.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <set>

#include "crnc/errors.hpp"

namespace crnc {

namespace {

std::vector<Term> merge_terms(std::vector<Term> terms, const char* side) {
  std::vector<Term> merged;
  for (const auto& t : terms) {
    if (t.coeff < 1) throw Error(std::string("non-positive coefficient among ") + side);
    auto it = std::find_if(merged.begin(), merged.end(), [&](const Term& m) { return m.species == t.species; });
    if (it == merged.end()) {
      merged.push_back(t);
    } else {
      it->coeff += t.coeff;
    }
  }
  return merged;
}

std::int64_t coeff_of(const std::vector<Term>& terms, SpeciesId s) {
  for (const auto& t : terms) {
    if (t.species == s) return t.coeff;
  }
  return 0;
}

}  // namespace

std::string_view role_name(Role role) {
  switch (role) {
    case Role::kInternal: return "internal";
    case Role::kInputPos: return "input+";
    case Role::kInputNeg: return "input-";
    case Role::kOutputPos: return "output+";
    case Role::kOutputNeg: return "output-";
  }
  return "internal";
}

std::optional<Role> parse_role(std::string_view text) {
  for (Role r : {Role::kInternal, Role::kInputPos, Role::kInputNeg, Role::kOutputPos, Role::kOutputNeg}) {
    if (role_name(r) == text) return r;
  }
  return std::nullopt;
}

Reaction::Reaction(std::vector<Term> reactants, std::vector<Term> products, double rate)
    : reactants_(merge_terms(std::move(reactants), "reactants")),
      products_(merge_terms(std::move(products), "products")),
      rate_(rate) {
  if (reactants_.empty()) throw Error("reaction without reactants");
  if (!(rate_ > 0.0) || !std::isfinite(rate_)) throw Error("rate constant must be positive and finite");
}

std::int64_t Reaction::reactant_coeff(SpeciesId s) const { return coeff_of(reactants_, s); }
std::int64_t Reaction::product_coeff(SpeciesId s) const { return coeff_of(products_, s); }

std::int64_t Reaction::molecularity() const {
  std::int64_t n = 0;
  for (const auto& t : reactants_) n += t.coeff;
  return n;
}

std::int64_t Reaction::product_count() const {
  std::int64_t n = 0;
  for (const auto& t : products_) n += t.coeff;
  return n;
}

Reaction Reaction::with_rate(double rate) const { return Reaction(reactants_, products_, rate); }

SpeciesId Crn::add_species(std::string name, Role role) {
  if (name.empty()) throw Error("empty species name");
  if (by_name_.count(name) != 0) throw Error("duplicate species '" + name + "'");
  const SpeciesId id = species_.size();
  by_name_.emplace(name, id);
  species_.push_back(Species{std::move(name), role});
  initial_.resize(species_.size());
  return id;
}

SpeciesId Crn::ensure_species(std::string_view name) {
  if (auto s = find(name)) return *s;
  return add_species(std::string(name));
}

std::optional<SpeciesId> Crn::find(std::string_view name) const {
  auto it = by_name_.find(std::string(name));
  if (it == by_name_.end()) return std::nullopt;
  return it->second;
}

SpeciesId Crn::id(std::string_view name) const {
  if (auto s = find(name)) return *s;
  throw Error("unknown species '" + std::string(name) + "'");
}

void Crn::set_role(SpeciesId s, Role role) { species_.at(s).role = role; }

ReactionId Crn::add_reaction(Reaction reaction) {
  for (const auto* side : {&reaction.reactants(), &reaction.products()}) {
    for (const auto& t : *side) {
      if (t.species >= species_.size()) throw Error("reaction references undeclared species");
    }
  }
  reactions_.push_back(std::move(reaction));
  return reactions_.size() - 1;
}

void Crn::set_initial(SpeciesId s, Rational value) {
  if (value.sign() < 0) throw NegativeConcentration("negative initial concentration for '" + species_.at(s).name + "'");
  initial_[s] = std::move(value);
}

void Crn::add_initial(SpeciesId s, const Rational& value) { set_initial(s, initial_[s] + value); }

Crn Crn::with_rates(std::span<const double> rates) const {
  if (rates.size() != reactions_.size()) throw DimensionMismatch("rate vector length differs from reaction count");
  Crn out = *this;
  for (std::size_t j = 0; j < rates.size(); ++j) out.reactions_[j] = reactions_[j].with_rate(rates[j]);
  return out;
}

std::vector<std::vector<std::int64_t>> StoichiometryMatrix::to_rows() const {
  std::vector<std::vector<std::int64_t>> out(rows_, std::vector<std::int64_t>(cols_));
  for (std::size_t i = 0; i < rows_; ++i) {
    for (std::size_t j = 0; j < cols_; ++j) out[i][j] = at(i, j);
  }
  return out;
}

StoichiometryMatrix stoichiometry_matrix(const Crn& crn) {
  StoichiometryMatrix m(crn.species_count(), crn.reaction_count());
  for (ReactionId j = 0; j < crn.reaction_count(); ++j) {
    const auto& r = crn.reaction(j);
    for (const auto& t : r.reactants()) m.at(t.species, j) -= t.coeff;
    for (const auto& t : r.products()) m.at(t.species, j) += t.coeff;
  }
  return m;
}

bool reaction_enabled(const Reaction& r, const State& state) {
  for (const auto& t : r.reactants()) {
    if (state[t.species].sign() <= 0) return false;
  }
  return true;
}

namespace {

void check_dimensions(const Crn& crn, const State& state, const FluxVector& flux) {
  if (state.size() != crn.species_count()) throw DimensionMismatch("state dimension differs from species count");
  if (flux.size() != crn.reaction_count()) throw DimensionMismatch("flux dimension differs from reaction count");
}

}  // namespace

bool is_applicable(const Crn& crn, const State& state, const FluxVector& flux) {
  check_dimensions(crn, state, flux);
  for (ReactionId j = 0; j < crn.reaction_count(); ++j) {
    if (flux[j].sign() < 0) return false;
    if (flux[j].sign() > 0 && !reaction_enabled(crn.reaction(j), state)) return false;
  }
  return true;
}

State apply_flux(const Crn& crn, const State& state, const FluxVector& flux) {
  if (!is_applicable(crn, state, flux)) throw NotApplicable("flux vector is not applicable at this state");
  State out = state;
  for (ReactionId j = 0; j < crn.reaction_count(); ++j) {
    if (flux[j].is_zero()) continue;
    const auto& r = crn.reaction(j);
    for (const auto& t : r.reactants()) out[t.species] -= flux[j] * Rational(t.coeff);
    for (const auto& t : r.products()) out[t.species] += flux[j] * Rational(t.coeff);
  }
  for (SpeciesId s = 0; s < out.size(); ++s) {
    if (out[s].sign() < 0) {
      throw NegativeConcentration("applying flux drives '" + crn.species(s).name + "' negative");
    }
  }
  return out;
}

bool is_static(const Crn& crn, const State& state) {
  if (state.size() != crn.species_count()) throw DimensionMismatch("state dimension differs from species count");
  for (const auto& r : crn.reactions()) {
    if (reaction_enabled(r, state)) return false;
  }
  return true;
}

CheckResult check_non_competitive(const Crn& crn) {
  CheckResult result;
  for (SpeciesId s = 0; s < crn.species_count(); ++s) {
    std::vector<ReactionId> consuming;
    bool decreased = false;
    for (ReactionId j = 0; j < crn.reaction_count(); ++j) {
      const auto& r = crn.reaction(j);
      if (r.reactant_coeff(s) > 0) consuming.push_back(j);
      if (r.decreases(s)) decreased = true;
    }
    if (decreased && consuming.size() > 1) {
      std::string msg = "species " + crn.species(s).name + " is decreased in a reaction and is a reactant in reactions";
      for (std::size_t k = 0; k < consuming.size(); ++k) msg += (k ? "," : " ") + std::to_string(consuming[k] + 1);
      result.violations.push_back(Violation{s, std::move(consuming), std::move(msg)});
    }
  }
  return result;
}

CheckResult check_composable(const Crn& crn) {
  CheckResult result;
  for (SpeciesId s = 0; s < crn.species_count(); ++s) {
    if (!is_output(crn.species(s).role)) continue;
    std::vector<ReactionId> consuming;
    for (ReactionId j = 0; j < crn.reaction_count(); ++j) {
      if (crn.reaction(j).reactant_coeff(s) > 0) consuming.push_back(j);
    }
    if (!consuming.empty()) {
      std::string msg = "output species " + crn.species(s).name + " is a reactant in reactions";
      for (std::size_t k = 0; k < consuming.size(); ++k) msg += (k ? "," : " ") + std::to_string(consuming[k] + 1);
      result.violations.push_back(Violation{s, std::move(consuming), std::move(msg)});
    }
  }
  return result;
}

std::vector<std::vector<ReactionId>> reaction_successors(const Crn& crn) {
  const std::size_t n = crn.reaction_count();
  std::vector<std::vector<ReactionId>> consumers(crn.species_count());
  for (ReactionId k = 0; k < n; ++k) {
    for (const auto& t : crn.reaction(k).reactants()) consumers[t.species].push_back(k);
  }
  std::vector<std::vector<ReactionId>> succ(n);
  for (ReactionId j = 0; j < n; ++j) {
    std::set<ReactionId> out;
    for (const auto& t : crn.reaction(j).products()) {
      for (ReactionId k : consumers[t.species]) {
        if (k != j) out.insert(k);
      }
    }
    succ[j].assign(out.begin(), out.end());
  }
  return succ;
}

FeedForwardResult check_feed_forward(const Crn& crn) {
  const std::size_t n = crn.reaction_count();
  const auto succ = reaction_successors(crn);
  std::vector<std::size_t> indegree(n, 0);
  for (const auto& s : succ) {
    for (ReactionId k : s) ++indegree[k];
  }
  // Smallest index first keeps the witness close to declaration order.
  std::priority_queue<ReactionId, std::vector<ReactionId>, std::greater<>> ready;
  for (ReactionId j = 0; j < n; ++j) {
    if (indegree[j] == 0) ready.push(j);
  }
  std::vector<ReactionId> order;
  while (!ready.empty()) {
    const ReactionId j = ready.top();
    ready.pop();
    order.push_back(j);
    for (ReactionId k : succ[j]) {
      if (--indegree[k] == 0) ready.push(k);
    }
  }
  FeedForwardResult result;
  if (order.size() == n) {
    result.ordering = std::move(order);
    return result;
  }
  // Every leftover reaction has a leftover predecessor; walking predecessors must revisit one.
  std::vector<std::vector<ReactionId>> pred(n);
  for (ReactionId j = 0; j < n; ++j) {
    for (ReactionId k : succ[j]) {
      if (indegree[j] > 0 && indegree[k] > 0) pred[k].push_back(j);
    }
  }
  ReactionId cur = 0;
  while (indegree[cur] == 0) ++cur;
  std::vector<std::size_t> seen_at(n, n);
  std::vector<ReactionId> walk;
  while (seen_at[cur] == n) {
    seen_at[cur] = walk.size();
    walk.push_back(cur);
    cur = pred[cur].front();
  }
  std::vector<ReactionId> cycle(walk.begin() + static_cast<std::ptrdiff_t>(seen_at[cur]), walk.end());
  std::reverse(cycle.begin(), cycle.end());
  result.cycle = std::move(cycle);
  return result;
}

}  // namespace crnc

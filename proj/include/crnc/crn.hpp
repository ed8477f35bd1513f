#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "crnc/rational.hpp"

namespace crnc {

using SpeciesId = std::size_t;
using ReactionId = std::size_t;

enum class Role { kInternal, kInputPos, kInputNeg, kOutputPos, kOutputNeg };

std::string_view role_name(Role role);
std::optional<Role> parse_role(std::string_view text);
inline bool is_input(Role r) { return r == Role::kInputPos || r == Role::kInputNeg; }
inline bool is_output(Role r) { return r == Role::kOutputPos || r == Role::kOutputNeg; }

struct Species {
  std::string name;
  Role role = Role::kInternal;

  friend bool operator==(const Species&, const Species&) = default;
};

struct Term {
  SpeciesId species;
  std::int64_t coeff;

  friend bool operator==(const Term&, const Term&) = default;
};

// Irreversible reaction with integer stoichiometry. Repeated species on one
// side are merged into a single term at the position of first appearance.
class Reaction {
 public:
  Reaction(std::vector<Term> reactants, std::vector<Term> products, double rate = 1.0);

  const std::vector<Term>& reactants() const { return reactants_; }
  const std::vector<Term>& products() const { return products_; }
  double rate() const { return rate_; }

  std::int64_t reactant_coeff(SpeciesId s) const;
  std::int64_t product_coeff(SpeciesId s) const;
  std::int64_t net_change(SpeciesId s) const { return product_coeff(s) - reactant_coeff(s); }
  bool decreases(SpeciesId s) const { return net_change(s) < 0; }

  // Sum of reactant coefficients: 1 for unimolecular, 2 for bimolecular.
  std::int64_t molecularity() const;
  std::int64_t product_count() const;

  Reaction with_rate(double rate) const;

  friend bool operator==(const Reaction&, const Reaction&) = default;

 private:
  std::vector<Term> reactants_;
  std::vector<Term> products_;
  double rate_ = 1.0;
};

// Nonnegative vector of exact rationals, tagged by what it indexes.
template <class Tag>
class ExactVector {
 public:
  ExactVector() = default;
  explicit ExactVector(std::size_t n) : values_(n) {}
  explicit ExactVector(std::vector<Rational> values) : values_(std::move(values)) {}

  std::size_t size() const { return values_.size(); }
  Rational& operator[](std::size_t i) { return values_[i]; }
  const Rational& operator[](std::size_t i) const { return values_[i]; }
  const std::vector<Rational>& values() const { return values_; }
  void resize(std::size_t n) { values_.resize(n); }

  bool is_zero() const {
    for (const auto& v : values_) {
      if (!v.is_zero()) return false;
    }
    return true;
  }
  std::vector<double> to_doubles() const {
    std::vector<double> out;
    out.reserve(values_.size());
    for (const auto& v : values_) out.push_back(v.to_double());
    return out;
  }

  friend bool operator==(const ExactVector&, const ExactVector&) = default;

 private:
  std::vector<Rational> values_;
};

struct StateTag {};
struct FluxTag {};
using State = ExactVector<StateTag>;
using FluxVector = ExactVector<FluxTag>;

class Crn {
 public:
  SpeciesId add_species(std::string name, Role role = Role::kInternal);
  // Returns the id of `name`, declaring it as internal if absent.
  SpeciesId ensure_species(std::string_view name);
  std::optional<SpeciesId> find(std::string_view name) const;
  SpeciesId id(std::string_view name) const;
  void set_role(SpeciesId s, Role role);

  ReactionId add_reaction(Reaction reaction);
  void set_initial(SpeciesId s, Rational value);
  void add_initial(SpeciesId s, const Rational& value);

  const std::vector<Species>& species() const { return species_; }
  const Species& species(SpeciesId s) const { return species_.at(s); }
  const std::vector<Reaction>& reactions() const { return reactions_; }
  const Reaction& reaction(ReactionId r) const { return reactions_.at(r); }
  const State& initial() const { return initial_; }

  std::size_t species_count() const { return species_.size(); }
  std::size_t reaction_count() const { return reactions_.size(); }

  // Copy with rate constants replaced; `rates.size()` must equal reaction_count().
  Crn with_rates(std::span<const double> rates) const;

  friend bool operator==(const Crn& a, const Crn& b) {
    return a.species_ == b.species_ && a.reactions_ == b.reactions_ && a.initial_ == b.initial_;
  }

 private:
  std::vector<Species> species_;
  std::unordered_map<std::string, SpeciesId> by_name_;
  std::vector<Reaction> reactions_;
  State initial_;
};

// Species x reaction matrix of net stoichiometric change.
class StoichiometryMatrix {
 public:
  StoichiometryMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), entries_(rows * cols, 0) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::int64_t& at(std::size_t i, std::size_t j) { return entries_[i * cols_ + j]; }
  std::int64_t at(std::size_t i, std::size_t j) const { return entries_[i * cols_ + j]; }
  std::vector<std::vector<std::int64_t>> to_rows() const;

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<std::int64_t> entries_;
};

StoichiometryMatrix stoichiometry_matrix(const Crn& crn);

bool is_applicable(const Crn& crn, const State& state, const FluxVector& flux);
// state + M * flux, exactly. Throws NotApplicable or NegativeConcentration.
State apply_flux(const Crn& crn, const State& state, const FluxVector& flux);
bool is_static(const Crn& crn, const State& state);
// True iff every reactant of `r` is strictly positive in `state`.
bool reaction_enabled(const Reaction& r, const State& state);

struct Violation {
  std::optional<SpeciesId> species;
  std::vector<ReactionId> reactions;  // 0-based
  std::string message;
};

struct CheckResult {
  std::vector<Violation> violations;

  bool passed() const { return violations.empty(); }
};

CheckResult check_non_competitive(const Crn& crn);
CheckResult check_composable(const Crn& crn);

struct FeedForwardResult {
  std::optional<std::vector<ReactionId>> ordering;
  std::vector<ReactionId> cycle;  // nonempty iff ordering is absent

  bool ok() const { return ordering.has_value(); }
};

FeedForwardResult check_feed_forward(const Crn& crn);

// Edges r -> r' (r != r') where some product of r is a reactant of r'.
std::vector<std::vector<ReactionId>> reaction_successors(const Crn& crn);

}  // namespace crnc

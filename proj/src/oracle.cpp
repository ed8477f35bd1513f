#include "crnc/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <queue>
#include <set>

#include "crnc/errors.hpp"

namespace crnc {

namespace {

constexpr std::size_t kMaxLimitingCombinations = 4096;

// Tarjan's strongly connected components of the reaction graph.
std::vector<std::size_t> components(const std::vector<std::vector<ReactionId>>& succ, std::size_t& count) {
  const std::size_t n = succ.size();
  const std::size_t unset = n;
  std::vector<std::size_t> index(n, unset), low(n, 0), comp(n, unset);
  std::vector<bool> on_stack(n, false);
  std::vector<ReactionId> stack;
  std::size_t next = 0;
  count = 0;
  // Iterative to survive long multiplier chains.
  for (ReactionId root = 0; root < n; ++root) {
    if (index[root] != unset) continue;
    std::vector<std::pair<ReactionId, std::size_t>> frames{{root, 0}};
    index[root] = low[root] = next++;
    stack.push_back(root);
    on_stack[root] = true;
    while (!frames.empty()) {
      auto& [v, edge] = frames.back();
      if (edge < succ[v].size()) {
        const ReactionId w = succ[v][edge++];
        if (index[w] == unset) {
          index[w] = low[w] = next++;
          stack.push_back(w);
          on_stack[w] = true;
          frames.emplace_back(w, 0);
        } else if (on_stack[w]) {
          low[v] = std::min(low[v], index[w]);
        }
        continue;
      }
      if (low[v] == index[v]) {
        ReactionId w;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[w] = false;
          comp[w] = count;
        } while (w != v);
        ++count;
      }
      const ReactionId done = v;
      frames.pop_back();
      if (!frames.empty()) low[frames.back().first] = std::min(low[frames.back().first], low[done]);
    }
  }
  return comp;
}

// Components in topological order; ties go to the component holding the smallest reaction.
std::vector<std::vector<ReactionId>> ordered_components(const Crn& crn) {
  const auto succ = reaction_successors(crn);
  std::size_t count = 0;
  const auto comp = components(succ, count);
  std::vector<std::vector<ReactionId>> members(count);
  for (ReactionId j = 0; j < succ.size(); ++j) members[comp[j]].push_back(j);
  std::vector<std::set<std::size_t>> dag(count);
  std::vector<std::size_t> indegree(count, 0);
  for (ReactionId j = 0; j < succ.size(); ++j) {
    for (ReactionId k : succ[j]) {
      if (comp[j] != comp[k] && dag[comp[j]].insert(comp[k]).second) ++indegree[comp[k]];
    }
  }
  using Item = std::pair<ReactionId, std::size_t>;  // (smallest member, component)
  std::priority_queue<Item, std::vector<Item>, std::greater<>> ready;
  for (std::size_t c = 0; c < count; ++c) {
    if (indegree[c] == 0) ready.emplace(members[c].front(), c);
  }
  std::vector<std::vector<ReactionId>> order;
  while (!ready.empty()) {
    const std::size_t c = ready.top().second;
    ready.pop();
    order.push_back(members[c]);
    for (std::size_t d : dag[c]) {
      if (--indegree[d] == 0) ready.emplace(members[d].front(), d);
    }
  }
  return order;
}

// Applies one straight-line segment in place, checking applicability and nonnegativity.
void apply_segment(const Crn& crn, State& state, const PathSegment& seg) {
  for (const auto& [j, amount] : seg.flux) {
    if (amount.sign() < 0) throw NotApplicable("negative flux on reaction " + std::to_string(j + 1));
    if (amount.sign() > 0 && !reaction_enabled(crn.reaction(j), state)) {
      throw NotApplicable("reaction " + std::to_string(j + 1) + " has positive flux but is not enabled");
    }
  }
  for (const auto& [j, amount] : seg.flux) {
    const Reaction& r = crn.reaction(j);
    for (const auto& t : r.reactants()) state[t.species] -= amount * Rational(t.coeff);
    for (const auto& t : r.products()) state[t.species] += amount * Rational(t.coeff);
  }
  for (SpeciesId s = 0; s < state.size(); ++s) {
    if (state[s].sign() < 0) {
      throw NegativeConcentration("species " + crn.species(s).name + " would become " + state[s].to_string());
    }
  }
}

class Runner {
 public:
  Runner(const Crn& crn, State initial, const OracleOptions& options) : crn_(crn), options_(options) {
    result_.state = std::move(initial);
    result_.path.cumulative = FluxVector(crn.reaction_count());
  }

  OracleResult run() {
    for (const auto& component : ordered_components(crn_)) {
      if (component.size() > 1) {
        run_cycle(component);
      } else {
        const ReactionId j = component.front();
        const Rational t = bounded_flux(j);
        if (t.sign() > 0) push({{{j, t}}});
      }
    }
    if (result_.exact && !is_static(crn_, result_.state)) {
      throw NoStaticStateFound("oracle finished in a state that is not static");
    }
    return std::move(result_);
  }

 private:
  Rational bounded_flux(ReactionId j) {
    auto t = maximal_flux(crn_.reaction(j), result_.state);
    if (!t) throw NoStaticStateFound("reaction " + std::to_string(j + 1) + " is enabled and decreases nothing");
    return *t;
  }

  void push(PathSegment seg) {
    apply_segment(crn_, result_.state, seg);
    for (const auto& [j, amount] : seg.flux) result_.path.cumulative[j] += amount;
    result_.path.segments.push_back(std::move(seg));
  }

  bool component_static(const std::vector<ReactionId>& component) const {
    return std::none_of(component.begin(), component.end(),
                        [&](ReactionId j) { return reaction_enabled(crn_.reaction(j), result_.state); });
  }

  void run_cycle(const std::vector<ReactionId>& component) {
    std::size_t rounds = 0;
    while (!component_static(component)) {
      if (rounds >= options_.max_rounds) {
        throw NoStaticStateFound("reaction loop still active after " + std::to_string(rounds) + " rounds");
      }
      if (options_.closure == LoopClosure::kEager && try_close(component)) return;
      double norm = 0.0;
      for (ReactionId j : component) {
        const Rational t = bounded_flux(j);
        if (t.sign() == 0) continue;
        norm = std::max(norm, t.to_double());
        push({{{j, t}}});
      }
      ++rounds;
      ++result_.rounds;
      if (norm < options_.loop_epsilon) {
        if (options_.closure == LoopClosure::kAtThreshold && try_close(component)) return;
        if (options_.closure == LoopClosure::kNone) {
          result_.exact = component_static(component);
          return;
        }
      }
    }
  }

  // Half-applies every loop reaction so each enabled one keeps positive
  // reactants, then solves for the flux that exhausts one decreased reactant
  // per enabled reaction. Accepted only if the result is verified static.
  bool try_close(const std::vector<ReactionId>& component) {
    for (ReactionId j : component) {
      const Rational t = bounded_flux(j);
      if (t.sign() > 0) push({{{j, t / Rational(2)}}});
    }
    std::vector<ReactionId> active;
    for (ReactionId j : component) {
      if (reaction_enabled(crn_.reaction(j), result_.state)) active.push_back(j);
    }
    if (active.empty()) return true;

    std::vector<std::vector<SpeciesId>> candidates;
    std::size_t combos = 1;
    for (ReactionId j : active) {
      std::vector<SpeciesId> c;
      for (const auto& t : crn_.reaction(j).reactants()) {
        if (crn_.reaction(j).decreases(t.species)) c.push_back(t.species);
      }
      combos = std::min(kMaxLimitingCombinations + 1, combos * c.size());
      candidates.push_back(std::move(c));
    }
    std::vector<std::size_t> pick(active.size(), 0);
    for (std::size_t attempt = 0; attempt < std::min(combos, kMaxLimitingCombinations); ++attempt) {
      std::vector<SpeciesId> limiting;
      for (std::size_t i = 0; i < active.size(); ++i) limiting.push_back(candidates[i][pick[i]]);
      if (auto seg = solve(component, active, limiting)) {
        push(std::move(*seg));
        ++result_.closures;
        return true;
      }
      for (std::size_t i = 0; i < pick.size(); ++i) {
        if (++pick[i] < candidates[i].size()) break;
        pick[i] = 0;
      }
    }
    return false;
  }

  std::optional<PathSegment> solve(const std::vector<ReactionId>& component, const std::vector<ReactionId>& active,
                                   const std::vector<SpeciesId>& limiting) const {
    const std::size_t n = active.size();
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = i + 1; k < n; ++k) {
        if (limiting[i] == limiting[k]) return std::nullopt;
      }
    }
    // Rows: limiting species; columns: active reactions; last column: -state.
    std::vector<std::vector<Rational>> a(n, std::vector<Rational>(n + 1));
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = 0; k < n; ++k) a[i][k] = Rational(crn_.reaction(active[k]).net_change(limiting[i]));
      a[i][n] = -result_.state[limiting[i]];
    }
    for (std::size_t col = 0; col < n; ++col) {
      std::size_t pivot = col;
      while (pivot < n && a[pivot][col].is_zero()) ++pivot;
      if (pivot == n) return std::nullopt;
      std::swap(a[pivot], a[col]);
      const Rational inv = Rational(1) / a[col][col];
      for (std::size_t k = col; k <= n; ++k) a[col][k] *= inv;
      for (std::size_t row = 0; row < n; ++row) {
        if (row == col || a[row][col].is_zero()) continue;
        const Rational f = a[row][col];
        for (std::size_t k = col; k <= n; ++k) a[row][k] -= f * a[col][k];
      }
    }
    PathSegment seg;
    for (std::size_t k = 0; k < n; ++k) {
      if (a[k][n].sign() < 0) return std::nullopt;
      if (a[k][n].sign() > 0) seg.flux.emplace_back(active[k], a[k][n]);
    }
    State next = result_.state;
    try {
      apply_segment(crn_, next, seg);
    } catch (const Error&) {
      return std::nullopt;
    }
    for (ReactionId j : component) {
      if (reaction_enabled(crn_.reaction(j), next)) return std::nullopt;
    }
    return seg;
  }

  const Crn& crn_;
  const OracleOptions& options_;
  OracleResult result_;
};

}  // namespace

std::optional<Rational> maximal_flux(const Reaction& r, const State& state) {
  if (!reaction_enabled(r, state)) return Rational(0);
  std::optional<Rational> best;
  for (const auto& t : r.reactants()) {
    const std::int64_t net = r.net_change(t.species);
    if (net >= 0) continue;
    Rational limit = state[t.species] / Rational(-net);
    if (!best || limit < *best) best = std::move(limit);
  }
  return best;
}

OracleResult oracle_equilibrium(const Crn& crn, const OracleOptions& options) {
  return oracle_equilibrium(crn, crn.initial(), options);
}

OracleResult oracle_equilibrium(const Crn& crn, const State& initial, const OracleOptions& options) {
  if (initial.size() != crn.species_count()) throw DimensionMismatch("initial state dimension differs from species count");
  const auto nc = check_non_competitive(crn);
  if (!nc.passed()) throw NotNonCompetitive(nc.violations.front().message);
  return Runner(crn, initial, options).run();
}

State replay(const Crn& crn, const State& initial, const OraclePath& path) {
  State state = initial;
  for (const auto& seg : path.segments) apply_segment(crn, state, seg);
  return state;
}

}  // namespace crnc

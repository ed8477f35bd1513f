#pragma once

#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

#include "crnc/crn.hpp"

namespace crnc {

// When to attempt the exact solve that closes a reaction loop.
//   kEager: before every round of a cyclic component.
//   kAtThreshold: once the round flux drops below loop_epsilon.
//   kNone: never; stop iterating at the threshold and report an inexact state.
enum class LoopClosure { kEager, kAtThreshold, kNone };

struct OracleOptions {
  double loop_epsilon = 1e-12;
  std::size_t max_rounds = 10000;
  LoopClosure closure = LoopClosure::kEager;
};

// One straight-line step; several reactions at once for loop closure.
struct PathSegment {
  std::vector<std::pair<ReactionId, Rational>> flux;
};

struct OraclePath {
  std::vector<PathSegment> segments;
  FluxVector cumulative;
};

struct OracleResult {
  State state;
  OraclePath path;
  bool exact = true;  // false only for LoopClosure::kNone stopping short of a static state
  std::size_t rounds = 0;
  std::size_t closures = 0;
};

// Largest t with state + t * column(r) >= 0 on the reactants r decreases.
// Zero when r is not enabled; nullopt when enabled and nothing is decreased.
std::optional<Rational> maximal_flux(const Reaction& r, const State& state);

// Throws NotNonCompetitive, or NoStaticStateFound when a reaction can fire
// forever or the round limit is hit before a closure succeeds.
OracleResult oracle_equilibrium(const Crn& crn, const OracleOptions& options = {});
OracleResult oracle_equilibrium(const Crn& crn, const State& initial, const OracleOptions& options = {});

// Replays a path from `initial`, checking each segment is applicable.
State replay(const Crn& crn, const State& initial, const OraclePath& path);

}  // namespace crnc

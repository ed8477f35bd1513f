#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "crnc/crn.hpp"
#include "crnc/oracle.hpp"

namespace crnc {

struct IntegratorConfig {
  double rel_tol = 1e-8;
  double abs_tol = 1e-10;
  double t_end = 50.0;
  double initial_step = 1e-4;
  double min_step = 1e-13;
  std::size_t max_steps = 100'000'000;
  // Accepted steps earlier than this are integrated but not stored.
  double record_from = 0.0;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<std::vector<double>> states;

  const std::vector<double>& final_state() const { return states.back(); }
  // Header "t,<species...>", one row per stored step.
  std::string to_csv(const Crn& crn) const;
};

// k_j * prod c(S)^coeff for every reaction.
std::vector<double> reaction_rates(const Crn& crn, std::span<const double> c);
// dc/dt = M * reaction_rates(c).
std::vector<double> mass_action_derivative(const Crn& crn, std::span<const double> c);

// Dormand-Prince 5(4) with error control on rel_tol/abs_tol. A step that would
// push a species below -abs_tol is retried with a smaller step; smaller
// excursions are clamped to 0. Throws Error on step underflow or NaN.
Trajectory simulate_mass_action(const Crn& crn, const IntegratorConfig& config = {});
Trajectory simulate_mass_action(const Crn& crn, std::span<const double> initial, const IntegratorConfig& config = {});

// Final state if every species varies by less than `tol` over the trailing
// `window`; throws NotConverged otherwise.
std::vector<double> converged_output(const Trajectory& traj, double window, double tol);

struct ConvergenceConfig {
  IntegratorConfig integrator;  // integrator.t_end is the first horizon
  double window_fraction = 0.1;
  double tol = 1e-6;
  double max_t_end = 1e7;
  // Quantities that must settle; every species when empty. Decoded dual-rail
  // outputs settle long before both rails stop drifting together.
  std::function<std::vector<double>(const std::vector<double>&)> observe;
};

struct ConvergedState {
  std::vector<double> state;
  double t_end = 0.0;
};

// Doubles the horizon until every observed quantity varies by less than tol
// over the trailing window.
ConvergedState simulate_to_convergence(const Crn& crn, std::span<const double> initial,
                                       const ConvergenceConfig& config = {});

// Starts the ODE from the state the prefix reaches; throws NotApplicable or
// NegativeConcentration for a bad prefix.
ConvergedState perturb_then_converge(const Crn& crn, const State& initial, const OraclePath& prefix,
                                     const ConvergenceConfig& config = {});

// Independent uniform draws in [lo, hi] per reaction.
std::vector<double> resample_rates(const Crn& crn, std::uint64_t seed, double lo = 0.1, double hi = 10.0);

}  // namespace crnc

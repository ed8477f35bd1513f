#include "crnc/mass_action.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <sstream>

#include "crnc/crn_text.hpp"
#include "crnc/errors.hpp"

namespace crnc {

namespace {

// Flattened reaction data for the inner loop.
struct Kinetics {
  struct Entry {
    std::size_t species;
    int coeff;
  };
  std::vector<double> rate;
  std::vector<std::vector<Entry>> reactants;
  std::vector<std::vector<std::pair<std::size_t, double>>> net;  // nonzero net changes

  explicit Kinetics(const Crn& crn) {
    for (const auto& r : crn.reactions()) {
      rate.push_back(r.rate());
      std::vector<Entry> in;
      for (const auto& t : r.reactants()) in.push_back({t.species, static_cast<int>(t.coeff)});
      reactants.push_back(std::move(in));
      std::vector<std::pair<std::size_t, double>> delta;
      for (SpeciesId s = 0; s < crn.species_count(); ++s) {
        if (r.reactant_coeff(s) == 0 && r.product_coeff(s) == 0) continue;
        const auto d = r.net_change(s);
        if (d != 0) delta.emplace_back(s, static_cast<double>(d));
      }
      net.push_back(std::move(delta));
    }
  }

  double flux(std::size_t j, const double* c) const {
    double v = rate[j];
    for (const auto& e : reactants[j]) {
      const double x = c[e.species];
      for (int k = 0; k < e.coeff; ++k) v *= x;
    }
    return v;
  }

  void derivative(const double* c, double* out, std::size_t n) const {
    std::fill(out, out + n, 0.0);
    for (std::size_t j = 0; j < rate.size(); ++j) {
      const double v = flux(j, c);
      if (v == 0.0) continue;
      for (const auto& [s, d] : net[j]) out[s] += d * v;
    }
  }
};

// Dormand-Prince tableau; the system is autonomous so stage times are not needed.
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200, e6 = 22.0 / 525,
                 e7 = -1.0 / 40;

class Stepper {
 public:
  Stepper(const Crn& crn, std::span<const double> initial, const IntegratorConfig& config)
      : kin_(crn), cfg_(config), n_(initial.size()), y_(initial.begin(), initial.end()) {
    if (!(cfg_.rel_tol > 0.0) || !(cfg_.abs_tol > 0.0)) throw Error("integrator tolerances must be positive");
    if (initial.size() != crn.species_count()) throw DimensionMismatch("initial state dimension differs from species count");
    for (double v : y_) {
      if (!std::isfinite(v) || v < 0.0) throw Error("initial concentrations must be finite and nonnegative");
    }
    for (auto* k : {&k1_, &k2_, &k3_, &k4_, &k5_, &k6_, &k7_}) k->assign(n_, 0.0);
    tmp_.assign(n_, 0.0);
    next_.assign(n_, 0.0);
    kin_.derivative(y_.data(), k1_.data(), n_);
    h_ = cfg_.initial_step;
  }

  double time() const { return t_; }
  const std::vector<double>& state() const { return y_; }

  // Advances to exactly `t_target`, calling on_step after every accepted step.
  void advance(double t_target, const std::function<void(double, const std::vector<double>&)>& on_step) {
    while (t_ < t_target) {
      if (++steps_ > cfg_.max_steps) throw Error("integrator exceeded the step limit");
      const double min_h = cfg_.min_step * std::max(1.0, std::abs(t_));
      if (h_ < min_h) throw Error("step size underflow at t=" + std::to_string(t_));
      double h = std::min(h_, t_target - t_);
      const bool last = h == t_target - t_;
      const double err = attempt(h);
      if (!std::isfinite(err)) {
        h_ = h * 0.25;
        if (h_ < min_h) throw Error("NaN in mass-action integration at t=" + std::to_string(t_));
        continue;
      }
      bool negative = false;
      for (double v : next_) negative = negative || v < -cfg_.abs_tol;
      if (err > 1.0 || negative) {
        const double shrink = negative ? 0.5 : std::max(0.2, 0.9 * std::pow(err, -0.2));
        h_ = h * shrink;
        continue;
      }
      bool clamped = false;
      for (double& v : next_) {
        if (v < 0.0) {
          v = 0.0;
          clamped = true;
        }
      }
      t_ = last ? t_target : t_ + h;
      y_.swap(next_);
      if (clamped) {
        kin_.derivative(y_.data(), k1_.data(), n_);
      } else {
        k1_.swap(k7_);  // first-same-as-last
      }
      const double grow = err == 0.0 ? 5.0 : std::min(5.0, std::max(0.2, 0.9 * std::pow(err, -0.2)));
      // Keep the proposed step when the last one was only cut short by the target.
      h_ = last ? std::max(h_, h * grow) : h * grow;
      if (on_step) on_step(t_, y_);
    }
  }

 private:
  double attempt(double h) {
    auto stage = [&](std::vector<double>& out, std::initializer_list<std::pair<const std::vector<double>*, double>> terms) {
      for (std::size_t i = 0; i < n_; ++i) {
        double v = y_[i];
        for (const auto& [k, a] : terms) v += h * a * (*k)[i];
        tmp_[i] = v;
      }
      kin_.derivative(tmp_.data(), out.data(), n_);
    };
    stage(k2_, {{&k1_, a21}});
    stage(k3_, {{&k1_, a31}, {&k2_, a32}});
    stage(k4_, {{&k1_, a41}, {&k2_, a42}, {&k3_, a43}});
    stage(k5_, {{&k1_, a51}, {&k2_, a52}, {&k3_, a53}, {&k4_, a54}});
    stage(k6_, {{&k1_, a61}, {&k2_, a62}, {&k3_, a63}, {&k4_, a64}, {&k5_, a65}});
    for (std::size_t i = 0; i < n_; ++i) {
      next_[i] = y_[i] + h * (b1 * k1_[i] + b3 * k3_[i] + b4 * k4_[i] + b5 * k5_[i] + b6 * k6_[i]);
    }
    kin_.derivative(next_.data(), k7_.data(), n_);
    double err = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
      const double e =
          h * (e1 * k1_[i] + e3 * k3_[i] + e4 * k4_[i] + e5 * k5_[i] + e6 * k6_[i] + e7 * k7_[i]);
      const double scale = cfg_.abs_tol + cfg_.rel_tol * std::max(std::abs(y_[i]), std::abs(next_[i]));
      err = std::max(err, std::abs(e) / scale);
      if (!std::isfinite(next_[i])) return std::numeric_limits<double>::quiet_NaN();
    }
    return err;
  }

  Kinetics kin_;
  IntegratorConfig cfg_;
  std::size_t n_;
  std::vector<double> y_;
  std::vector<double> k1_, k2_, k3_, k4_, k5_, k6_, k7_, tmp_, next_;
  double t_ = 0.0;
  double h_ = 0.0;
  std::size_t steps_ = 0;
};

}  // namespace

std::string Trajectory::to_csv(const Crn& crn) const {
  std::ostringstream os;
  os << 't';
  for (const auto& s : crn.species()) os << ',' << s.name;
  os << '\n';
  for (std::size_t i = 0; i < times.size(); ++i) {
    os << format_double(times[i]);
    for (double v : states[i]) os << ',' << format_double(v);
    os << '\n';
  }
  return os.str();
}

std::vector<double> reaction_rates(const Crn& crn, std::span<const double> c) {
  if (c.size() != crn.species_count()) throw DimensionMismatch("state dimension differs from species count");
  const Kinetics kin(crn);
  std::vector<double> out;
  for (std::size_t j = 0; j < crn.reaction_count(); ++j) out.push_back(kin.flux(j, c.data()));
  return out;
}

std::vector<double> mass_action_derivative(const Crn& crn, std::span<const double> c) {
  if (c.size() != crn.species_count()) throw DimensionMismatch("state dimension differs from species count");
  const Kinetics kin(crn);
  std::vector<double> out(c.size());
  kin.derivative(c.data(), out.data(), c.size());
  return out;
}

Trajectory simulate_mass_action(const Crn& crn, const IntegratorConfig& config) {
  const auto init = crn.initial().to_doubles();
  return simulate_mass_action(crn, init, config);
}

Trajectory simulate_mass_action(const Crn& crn, std::span<const double> initial, const IntegratorConfig& config) {
  Stepper stepper(crn, initial, config);
  Trajectory traj;
  if (config.record_from <= 0.0) {
    traj.times.push_back(0.0);
    traj.states.push_back(stepper.state());
  }
  stepper.advance(config.t_end, [&](double t, const std::vector<double>& y) {
    if (t < config.record_from) return;
    traj.times.push_back(t);
    traj.states.push_back(y);
  });
  if (traj.times.empty() || traj.times.back() != stepper.time()) {
    traj.times.push_back(stepper.time());
    traj.states.push_back(stepper.state());
  }
  return traj;
}

std::vector<double> converged_output(const Trajectory& traj, double window, double tol) {
  if (traj.times.empty()) throw NotConverged("empty trajectory");
  const double t_end = traj.times.back();
  if (traj.times.front() > t_end - window) throw NotConverged("trajectory does not cover the convergence window");
  const auto& last = traj.final_state();
  for (std::size_t i = traj.times.size(); i-- > 0 && traj.times[i] >= t_end - window;) {
    for (std::size_t s = 0; s < last.size(); ++s) {
      if (std::abs(traj.states[i][s] - last[s]) >= tol) {
        throw NotConverged("species " + std::to_string(s) + " still moving at t=" + std::to_string(traj.times[i]));
      }
    }
  }
  return last;
}

ConvergedState simulate_to_convergence(const Crn& crn, std::span<const double> initial,
                                       const ConvergenceConfig& config) {
  Stepper stepper(crn, initial, config.integrator);
  auto observe = [&](const std::vector<double>& y) { return config.observe ? config.observe(y) : y; };
  double horizon = config.integrator.t_end;
  while (true) {
    const double window_start = horizon * (1.0 - config.window_fraction);
    std::vector<double> lo, hi;
    auto track = [&](const std::vector<double>& y) {
      const auto q = observe(y);
      if (lo.empty()) {
        lo = q;
        hi = q;
        return;
      }
      for (std::size_t i = 0; i < q.size(); ++i) {
        lo[i] = std::min(lo[i], q[i]);
        hi[i] = std::max(hi[i], q[i]);
      }
    };
    // Step exactly onto the window start so the whole window is observed.
    if (stepper.time() < window_start) stepper.advance(window_start, nullptr);
    track(stepper.state());
    stepper.advance(horizon, [&](double, const std::vector<double>& y) { track(y); });
    bool done = true;
    for (std::size_t i = 0; i < lo.size() && done; ++i) done = hi[i] - lo[i] < config.tol;
    if (done) return {stepper.state(), horizon};
    if (horizon >= config.max_t_end) {
      throw NotConverged("no convergence by t=" + std::to_string(horizon));
    }
    horizon = std::min(horizon * 2.0, config.max_t_end);
  }
}

ConvergedState perturb_then_converge(const Crn& crn, const State& initial, const OraclePath& prefix,
                                     const ConvergenceConfig& config) {
  const State start = replay(crn, initial, prefix);
  const auto y0 = start.to_doubles();
  return simulate_to_convergence(crn, y0, config);
}

std::vector<double> resample_rates(const Crn& crn, std::uint64_t seed, double lo, double hi) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(lo, hi);
  std::vector<double> rates;
  for (std::size_t j = 0; j < crn.reaction_count(); ++j) rates.push_back(dist(rng));
  return rates;
}

}  // namespace crnc

#include "cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <json.hpp>
#include <optional>
#include <sstream>
#include <thread>
#include <variant>

#include "crnc/chelu.hpp"
#include "crnc/compiler.hpp"
#include "crnc/crn_text.hpp"
#include "crnc/errors.hpp"
#include "crnc/mass_action.hpp"
#include "crnc/optimizer.hpp"
#include "crnc/oracle.hpp"
#include "crnc/relu_net.hpp"

namespace crnc::cli {

namespace {

// Bad command line or unreadable file.
class UsageError : public Error {
 public:
  using Error::Error;
};

enum class Level { kError = 0, kWarn = 1, kInfo = 2, kDebug = 3 };

class Log {
 public:
  explicit Log(std::ostream& err) : err_(err) {
    const char* env = std::getenv("CRNC_LOG");
    if (env == nullptr) return;
    const std::string v = env;
    if (v == "error") level_ = Level::kError;
    if (v == "warn") level_ = Level::kWarn;
    if (v == "info") level_ = Level::kInfo;
    if (v == "debug") level_ = Level::kDebug;
  }

  void operator()(Level level, const std::string& msg) const {
    static constexpr const char* kNames[] = {"error", "warn", "info", "debug"};
    if (level <= level_) err_ << "[" << kNames[static_cast<int>(level)] << "] " << msg << '\n';
  }

 private:
  std::ostream& err_;
  Level level_ = Level::kWarn;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void emit(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw UsageError("cannot write '" + path + "'");
  f << text;
}

std::vector<Rational> parse_row(std::string_view line, std::size_t line_no) {
  std::vector<Rational> row;
  std::size_t start = 0;
  while (start <= line.size()) {
    auto end = line.find(',', start);
    if (end == std::string_view::npos) end = line.size();
    std::string_view cell = line.substr(start, end - start);
    while (!cell.empty() && std::isspace(static_cast<unsigned char>(cell.front()))) cell.remove_prefix(1);
    while (!cell.empty() && std::isspace(static_cast<unsigned char>(cell.back()))) cell.remove_suffix(1);
    try {
      row.push_back(Rational::parse(cell));
    } catch (const ParseError& e) {
      throw ParseError(line_no, e.what());
    }
    start = end + 1;
  }
  return row;
}

// Rows of rationals; '#' comments and blank lines are skipped, and a first
// line that does not parse is taken as a header.
std::vector<std::vector<Rational>> parse_csv(const std::string& text) {
  std::vector<std::vector<Rational>> rows;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos || line[line.find_first_not_of(" \t")] == '#') continue;
    try {
      rows.push_back(parse_row(line, line_no));
    } catch (const ParseError&) {
      if (line_no == 1) continue;
      throw;
    }
  }
  return rows;
}

BreluMode parse_brelu(const std::string& v) {
  if (v == "on") return BreluMode::kOn;
  if (v == "off") return BreluMode::kOff;
  return BreluMode::kAuto;
}

State input_state(const Crn& crn, const std::string& input) {
  if (input.empty()) return crn.initial();
  const auto x = parse_row(input, 0);
  return encode_inputs(crn, x);
}

std::string join_ids(const std::vector<ReactionId>& ids) {
  std::string s;
  for (std::size_t k = 0; k < ids.size(); ++k) s += (k ? "," : "") + std::to_string(ids[k] + 1);
  return s;
}

std::string format_values(const std::vector<Rational>& v) {
  std::string s = "[";
  for (std::size_t k = 0; k < v.size(); ++k) s += (k ? ", " : "") + v[k].to_string();
  return s + "]";
}

std::string state_block(const Crn& crn, const State& state) {
  std::ostringstream os;
  for (SpeciesId s = 0; s < crn.species_count(); ++s) {
    if (!state[s].is_zero()) os << "init: " << crn.species(s).name << " = " << state[s] << '\n';
  }
  // Single-rail CRNs have no decodable outputs; the state alone is reported.
  try {
    const auto iface = dual_rail_interface(crn);
    const auto y = decode_outputs(crn, state);
    for (std::size_t k = 0; k < y.size(); ++k) os << "# output " << iface.outputs[k].base << " = " << y[k] << '\n';
  } catch (const Error&) {
  }
  return os.str();
}

struct CompileArgs {
  std::string net;
  std::string output;
  std::string brelu = "auto";
  bool optimize = false;
};

int cmd_compile(const CompileArgs& a, std::ostream& out, const Log& log) {
  const auto net = parse_network(read_file(a.net));
  Crn crn = compile_network(net, {parse_brelu(a.brelu)});
  log(Level::kInfo, "compiled " + std::to_string(crn.reaction_count()) + " reactions");
  if (a.optimize) {
    crn = optimize(crn).crn;
    log(Level::kInfo, "optimized to " + std::to_string(crn.reaction_count()) + " reactions");
  }
  emit(a.output, print_crn(crn), out);
  return kPass;
}

struct OptimizeArgs {
  std::string crn;
  std::string output;
  std::string report;
  std::int64_t ceiling = 1024;
};

int cmd_optimize(const OptimizeArgs& a, std::ostream& out, const Log& log) {
  const Crn crn = parse_crn(read_file(a.crn));
  OptimizeOptions options;
  options.product_ceiling = a.ceiling;
  options.on_step = [&](const Crn&, const std::string& name) { log(Level::kDebug, "eliminated " + name); };
  const auto result = optimize(crn, options);
  emit(a.output, print_crn(result.crn), out);
  if (!a.report.empty()) emit(a.report, count_report(crn, result.crn).to_json(), out);
  return kPass;
}

int cmd_verify(const std::string& path, std::ostream& out) {
  const Crn crn = parse_crn(read_file(path));
  bool ok = true;
  const auto nc = check_non_competitive(crn);
  if (nc.passed()) {
    out << "non-competitive: pass\n";
  } else {
    ok = false;
    for (const auto& v : nc.violations) {
      out << "competitive: species " << crn.species(*v.species).name << " in reactions " << join_ids(v.reactions)
          << '\n';
    }
  }
  const auto comp = check_composable(crn);
  if (comp.passed()) {
    out << "composable: pass\n";
  } else {
    ok = false;
    for (const auto& v : comp.violations) {
      out << "not composable: output " << crn.species(*v.species).name << " consumed in reactions "
          << join_ids(v.reactions) << '\n';
    }
  }
  const auto ff = check_feed_forward(crn);
  if (ff.ok()) {
    out << "feed-forward: pass (order " << join_ids(*ff.ordering) << ")\n";
  } else {
    out << "feed-forward: no (cycle " << join_ids(ff.cycle) << ")\n";
  }
  return ok ? kPass : kCheckFailed;
}

struct OracleArgs {
  std::string crn;
  std::string input;
  std::string closure = "eager";
  std::string output;
};

int cmd_oracle(const OracleArgs& a, std::ostream& out, const Log& log) {
  const Crn crn = parse_crn(read_file(a.crn));
  OracleOptions options;
  if (a.closure == "threshold") options.closure = LoopClosure::kAtThreshold;
  if (a.closure == "none") options.closure = LoopClosure::kNone;
  const auto result = oracle_equilibrium(crn, input_state(crn, a.input), options);
  log(Level::kInfo, std::to_string(result.path.segments.size()) + " path segments, " +
                        std::to_string(result.rounds) + " loop rounds, " + std::to_string(result.closures) +
                        " closures");
  std::string text = state_block(crn, result.state);
  if (!result.exact) text = "# not exact: stopped at the loop threshold\n" + text;
  emit(a.output, text, out);
  return kPass;
}

struct SimulateArgs {
  std::string crn;
  std::string input;
  std::string output;
  double t_end = 50.0;
  double rtol = 1e-8;
  double atol = 1e-10;
  std::optional<std::uint64_t> seed;
  double record_from = 0.0;
};

int cmd_simulate(const SimulateArgs& a, std::ostream& out, const Log& log) {
  Crn crn = parse_crn(read_file(a.crn));
  if (a.seed) {
    crn = crn.with_rates(resample_rates(crn, *a.seed));
    log(Level::kInfo, "rate constants resampled with seed " + std::to_string(*a.seed));
  }
  IntegratorConfig cfg;
  cfg.t_end = a.t_end;
  cfg.rel_tol = a.rtol;
  cfg.abs_tol = a.atol;
  cfg.record_from = a.record_from;
  const auto init = input_state(crn, a.input).to_doubles();
  const auto traj = simulate_mass_action(crn, init, cfg);
  emit(a.output, traj.to_csv(crn), out);
  return kPass;
}

struct TranslateArgs {
  std::string crn;
  std::string output;
  std::size_t trials = 0;
  std::string report;
  std::uint64_t seed = 1;
};

int cmd_translate(const TranslateArgs& a, std::ostream& out, std::ostream& err) {
  const Crn crn = parse_crn(read_file(a.crn));
  const auto checked = check_chelu(crn);
  if (const auto* v = std::get_if<CheluViolation>(&checked)) {
    err << "not a CheLU CRN (" << chelu_rule_name(v->rule) << "): " << v->message << '\n';
    return kCheckFailed;
  }
  const auto net = translate_to_brelu(crn, std::get<CheluCert>(checked));
  emit(a.output, print_network(net), out);
  if (a.trials == 0) return kPass;
  const auto report = verify_simulation(crn, net, a.trials, a.seed);
  if (!a.report.empty()) emit(a.report, report.to_json(), out);
  err << report.trials - report.mismatches << "/" << report.trials << " states agree\n";
  return report.mismatches == 0 ? kPass : kCheckFailed;
}

struct CheckArgs {
  std::string net;
  std::string inputs;
  std::string brelu = "auto";
  std::size_t jobs = 1;
  std::optional<double> ode_tol;
  bool no_ode = false;
  double t_end = 50.0;
  double settle_tol = 1e-6;
  std::string report;
};

struct RowResult {
  std::vector<Rational> expected;
  std::vector<Rational> oracle;
  std::vector<Rational> oracle_optimized;
  std::optional<double> ode_error;
  std::string failure;

  bool oracle_ok() const { return failure.empty() && oracle == expected && oracle_optimized == expected; }
};

double max_error(const std::vector<double>& got, const std::vector<Rational>& want) {
  double e = 0.0;
  for (std::size_t k = 0; k < want.size(); ++k) e = std::max(e, std::abs(got[k] - want[k].to_double()));
  return e;
}

int cmd_check(const CheckArgs& a, std::ostream& out, const Log& log) {
  const auto net = parse_network(read_file(a.net));
  const auto rows = parse_csv(read_file(a.inputs));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != net.input_dim()) {
      throw DimensionMismatch("row " + std::to_string(i + 1) + " has " + std::to_string(rows[i].size()) +
                              " values, network expects " + std::to_string(net.input_dim()));
    }
  }
  const Crn crn = compile_network(net, {parse_brelu(a.brelu)});
  const Crn optimized = optimize(crn).crn;
  log(Level::kInfo, "compiled " + std::to_string(crn.reaction_count()) + " reactions, optimized " +
                        std::to_string(optimized.reaction_count()));

  std::vector<RowResult> results(rows.size());
  auto work = [&](std::size_t i) {
    RowResult& r = results[i];
    try {
      r.expected = forward(net, rows[i]);
      r.oracle = decode_outputs(crn, oracle_equilibrium(crn, encode_inputs(crn, rows[i])).state);
      r.oracle_optimized =
          decode_outputs(optimized, oracle_equilibrium(optimized, encode_inputs(optimized, rows[i])).state);
      if (!a.no_ode) {
        ConvergenceConfig cfg;
        cfg.integrator.t_end = a.t_end;
        cfg.tol = a.settle_tol;
        cfg.observe = output_observer(optimized);
        const auto y0 = encode_inputs(optimized, rows[i]).to_doubles();
        const auto settled = simulate_to_convergence(optimized, y0, cfg);
        r.ode_error = max_error(decode_outputs(optimized, settled.state), r.expected);
      }
    } catch (const Error& e) {
      r.failure = e.what();
    }
  };
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < rows.size(); i = next++) work(i);
  };
  const std::size_t jobs = std::max<std::size_t>(1, std::min(a.jobs, rows.size()));
  std::vector<std::thread> pool;
  for (std::size_t k = 1; k < jobs; ++k) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  std::size_t matches = 0;
  bool ode_failed = false;
  double worst = 0.0;
  nlohmann::json jrows = nlohmann::json::array();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = results[i];
    const bool ok = r.oracle_ok();
    matches += ok ? 1 : 0;
    out << "row " << i + 1 << ": input " << format_values(rows[i]) << " network " << format_values(r.expected);
    if (!r.failure.empty()) {
      out << " error: " << r.failure << '\n';
    } else {
      out << " oracle " << format_values(r.oracle) << (ok ? " match" : " MISMATCH");
      if (r.ode_error) {
        out << " ode_err " << format_double(*r.ode_error);
        worst = std::max(worst, *r.ode_error);
        if (a.ode_tol && *r.ode_error > *a.ode_tol) ode_failed = true;
      }
      out << '\n';
    }
    nlohmann::json jr{{"row", i + 1}, {"oracle_match", ok}};
    if (r.ode_error) jr["ode_error"] = *r.ode_error;
    if (!r.failure.empty()) jr["error"] = r.failure;
    jrows.push_back(std::move(jr));
  }
  out << matches << "/" << rows.size() << " exact oracle matches";
  if (!a.no_ode && !rows.empty()) out << ", max ODE error " << format_double(worst);
  out << '\n';
  if (!a.report.empty()) {
    nlohmann::json doc{{"rows", rows.size()}, {"oracle_matches", matches}, {"max_ode_error", worst},
                       {"details", std::move(jrows)}};
    emit(a.report, doc.dump(2) + "\n", out);
  }
  return matches == rows.size() && !ode_failed ? kPass : kCheckFailed;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  const Log log(err);
  CLI::App app{"Compile ReLU networks to rate-independent chemical reaction networks and analyse them", "crnc"};
  app.require_subcommand(1);

  CompileArgs compile;
  auto* c = app.add_subcommand("compile", "compile a network JSON file to CRN text");
  c->add_option("net", compile.net, "network JSON")->required();
  c->add_option("-o,--output", compile.output, "output CRN file (default stdout)");
  c->add_option("--brelu", compile.brelu, "merged fan-out for {-1,0,1} weights")
      ->check(CLI::IsMember({"auto", "on", "off"}));
  c->add_flag("--optimize", compile.optimize, "run unimolecular elimination");

  OptimizeArgs opt;
  auto* o = app.add_subcommand("optimize", "eliminate unimolecular reactions");
  o->add_option("crn", opt.crn, "CRN file")->required();
  o->add_option("-o,--output", opt.output, "output CRN file (default stdout)");
  o->add_option("--report", opt.report, "write a JSON count report");
  o->add_option("--ceiling", opt.ceiling, "largest allowed product multiset")->check(CLI::PositiveNumber);

  std::string verify_path;
  auto* v = app.add_subcommand("verify", "check non-competitive, composable and feed-forward");
  v->add_option("crn", verify_path, "CRN file")->required();

  OracleArgs orc;
  auto* r = app.add_subcommand("oracle", "exact static state reached by maximal reaction application");
  r->add_option("crn", orc.crn, "CRN file")->required();
  r->add_option("--input", orc.input, "comma-separated rational inputs, dual-rail encoded onto input species");
  r->add_option("--closure", orc.closure, "loop closure policy")->check(CLI::IsMember({"eager", "threshold", "none"}));
  r->add_option("-o,--output", orc.output, "output file (default stdout)");

  SimulateArgs sim;
  auto* s = app.add_subcommand("simulate", "integrate mass-action kinetics and write a trajectory CSV");
  s->add_option("crn", sim.crn, "CRN file")->required();
  s->add_option("--input", sim.input, "comma-separated rational inputs");
  s->add_option("-o,--output", sim.output, "trajectory CSV (default stdout)");
  s->add_option("--t-end", sim.t_end, "final time")->check(CLI::PositiveNumber);
  s->add_option("--rtol", sim.rtol, "relative tolerance")->check(CLI::PositiveNumber);
  s->add_option("--atol", sim.atol, "absolute tolerance")->check(CLI::PositiveNumber);
  s->add_option("--seed", sim.seed, "resample rate constants uniformly in [0.1, 10]");
  s->add_option("--record-from", sim.record_from, "only store steps from this time on");

  TranslateArgs tr;
  auto* t = app.add_subcommand("translate", "translate a CheLU CRN to a binary-weight ReLU network");
  t->add_option("crn", tr.crn, "CRN file")->required();
  t->add_option("-o,--output", tr.output, "network JSON (default stdout)");
  t->add_option("--verify", tr.trials, "compare against the oracle on this many random states");
  t->add_option("--report", tr.report, "write the verification report JSON");
  t->add_option("--seed", tr.seed, "random seed for verification states");

  CheckArgs chk;
  auto* k = app.add_subcommand("check", "compare network, oracle and ODE outputs row by row");
  k->add_option("net", chk.net, "network JSON")->required();
  k->add_option("inputs", chk.inputs, "CSV of rational input rows")->required();
  k->add_option("--brelu", chk.brelu, "merged fan-out mode")->check(CLI::IsMember({"auto", "on", "off"}));
  k->add_option("--jobs", chk.jobs, "worker threads")->check(CLI::PositiveNumber);
  k->add_option("--ode-tol", chk.ode_tol, "fail when the ODE output error exceeds this");
  k->add_flag("--no-ode", chk.no_ode, "skip mass-action simulation");
  k->add_option("--t-end", chk.t_end, "first ODE horizon, doubled until settled")->check(CLI::PositiveNumber);
  k->add_option("--settle-tol", chk.settle_tol, "largest output change over the trailing window")
      ->check(CLI::PositiveNumber);
  k->add_option("--report", chk.report, "write a JSON report");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kPass;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kPass;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsage;
  }

  try {
    if (c->parsed()) return cmd_compile(compile, out, log);
    if (o->parsed()) return cmd_optimize(opt, out, log);
    if (v->parsed()) return cmd_verify(verify_path, out);
    if (r->parsed()) return cmd_oracle(orc, out, log);
    if (s->parsed()) return cmd_simulate(sim, out, log);
    if (t->parsed()) return cmd_translate(tr, out, err);
    if (k->parsed()) return cmd_check(chk, out, log);
  } catch (const ParseError& e) {
    err << "parse error: " << e.what() << '\n';
    return kUsage;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const DimensionMismatch& e) {
    err << "dimension mismatch: " << e.what() << '\n';
    return kUsage;
  } catch (const Error& e) {
    err << "failed: " << e.what() << '\n';
    return kCheckFailed;
  }
  return kUsage;
}

}  // namespace crnc::cli

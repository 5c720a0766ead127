// Command-line front end: solve, bench, verify and mpc.
//
// Exit codes: 0 success, 2 input error, 3 infeasible, 4 numerical failure.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "sipocp/sipocp.hpp"

namespace fs = std::filesystem;
using namespace sipocp;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitInfeasible = 3;
constexpr int kExitNumerical = 4;

struct Overrides
{
  std::optional<std::uint64_t> seed;
  std::optional<int> iters;
  std::optional<int> basis;
  std::optional<int> grid;
  std::optional<std::string> out_dir;
  bool oracle = false;
  int oracle_grid = 2000;
  bool no_plots = false;
  bool certified = false;
};

void add_common(CLI::App & cmd, Overrides & o)
{
  cmd.add_option("--seed", o.seed, "random seed of the annealing run");
  cmd.add_option("--iters", o.iters, "annealing iterations")->check(CLI::NonNegativeNumber);
  cmd.add_option("--basis", o.basis, "number of basis functions N")->check(CLI::PositiveNumber);
  cmd.add_option("--grid", o.grid, "verification grid intervals")->check(CLI::Range(2, 100000000));
  cmd.add_option("--out-dir", o.out_dir, "directory for the run artifacts");
  cmd.add_flag("--oracle", o.oracle, "also solve the dense collocation oracle");
  cmd.add_option("--oracle-grid", o.oracle_grid, "collocation oracle grid intervals")->check(CLI::Range(10, 1000000));
  cmd.add_flag("--no-plots", o.no_plots, "skip plots.svg");
  cmd.add_flag("--certified", o.certified, "add the inter-sample violation bound");
}

BasisSet resized_basis(const BasisSet & b, int n)
{
  switch (b.kind()) {
    case BasisKind::FourierSinCos: return BasisSet::fourier(n, b.horizon(), b.frequency_scaling());
    case BasisKind::PiecewisePolynomial: return BasisSet::piecewise_linear(n, b.horizon());
    case BasisKind::Custom: break;
  }
  throw ValidationError("--basis cannot resize a custom basis; edit basis.functions instead", "basis.N");
}

void apply(ProblemFile & f, const Overrides & o)
{
  if (o.seed) { f.sa.seed = *o.seed; }
  if (o.iters) { f.sa.iterations = *o.iters; }
  if (o.basis) { f.problem.basis = resized_basis(f.problem.basis, *o.basis); }
  if (o.grid) { f.outputs.grid = *o.grid; }
  if (o.out_dir) { f.outputs.dir = *o.out_dir; }
  if (o.no_plots) { f.outputs.plots = false; }
  if (o.certified) { f.outputs.certified_bound = true; }
  if (f.mpc) {
    if (o.seed) { f.mpc->sa.seed = *o.seed; }
    if (o.iters) { f.mpc->sa.iterations = *o.iters; }
  }
}

void print_validation(const ValidationReport & rep)
{
  for (const auto & w : rep.warnings) { std::cerr << "warning: " << w << "\n"; }
  for (const auto & n : rep.notes) { std::cerr << "note: " << n << "\n"; }
}

int run_solve(ProblemFile f, const Overrides & o, const std::string & command)
{
  apply(f, o);
  SolveOptions opts;
  if (o.oracle) { opts.oracle_grid = o.oracle_grid; }
  const SolveOutcome out = solve_problem(f, opts);
  print_validation(out.validation);
  for (const auto & w : out.warnings) { std::cerr << "warning: " << w << "\n"; }
  write_solve_artifacts(f.outputs.dir, f, out, command);

  std::printf("%s: G_max = %.10g (G_initial = %.10g, best at iteration %d of %d)\n", f.problem.name.c_str(), out.sa.G_max,
              out.sa.G_initial, out.sa.best_iteration, f.sa.iterations);
  std::printf("  max state violation %.3e at t = %.6g, control excess %.3e, terminal residual %.3e (%d grid points)\n",
              out.violation.max_state_violation, out.violation.argmax_time, out.violation.max_control_violation,
              out.violation.terminal_residual, out.violation.grid_points);
  if (out.oracle_value) { std::printf("  collocation oracle (%d intervals): %.10g\n", out.oracle_grid, *out.oracle_value); }
  std::printf("  wall time %.3f s; artifacts in %s\n", out.sa.wall_time, f.outputs.dir.c_str());
  return kExitOk;
}

int run_verify(ProblemFile f, const Overrides & o, const std::string & alpha_path, double tol)
{
  apply(f, o);
  require_valid(validate(f.problem, {.run_slater_probe = false}));
  const ControlCoefficients alpha = read_alpha_csv(alpha_path);
  if (alpha.channels() != f.problem.input_dim() || alpha.basis_size() != f.problem.basis.size()) {
    throw ValidationError("coefficients must be " + std::to_string(f.problem.input_dim()) + " x " +
                              std::to_string(f.problem.basis.size()),
                          "alpha");
  }
  const ViolationReport v = verify_dense(f.problem, alpha, f.outputs.grid, f.outputs.certified_bound);
  nlohmann::json j = violation_json(v);
  j["cost"] = Transcription(f.problem).cost_value(alpha);
  j["tolerance"] = tol;
  j["feasible"] = v.feasible(tol);
  fs::create_directories(f.outputs.dir);
  const std::string text = j.dump(2) + "\n";
  std::ofstream(fs::path(f.outputs.dir) / "verify.json", std::ios::binary) << text;
  std::cout << text;
  return v.feasible(tol) ? kExitOk : kExitInfeasible;
}

int run_mpc(ProblemFile f, const Overrides & o, std::optional<int> steps, std::optional<double> interval,
            const std::string & command)
{
  if (!f.mpc) {
    f.mpc = MpcConfig{};
    f.mpc->sa = f.sa;
  }
  apply(f, o);
  if (steps) { f.mpc->steps = *steps; }
  if (interval) { f.mpc->interval = *interval; }
  const ValidationReport rep = validate(f.problem);
  require_valid(rep);
  print_validation(rep);

  const ClosedLoopTrace trace = simulate_mpc(f.problem, *f.mpc);
  const fs::path dir = f.outputs.dir;
  fs::create_directories(dir);
  const Propagator prop(f.problem.system, f.problem.basis);
  std::ofstream(dir / "mpc_steps.csv", std::ios::binary) << mpc_steps_csv(trace, prop);
  std::ofstream(dir / "mpc_trajectory.csv", std::ios::binary) << mpc_fine_csv(trace);
  std::ofstream(dir / "mpc_summary.json", std::ios::binary) << mpc_summary_json(f, *f.mpc, trace, command).dump(2) << "\n";

  std::printf("%s closed loop: %s, %zu steps of h = %g, descent %d/%zu (%.0f%%)\n", f.problem.name.c_str(),
              trace.status().c_str(), trace.steps.size(), f.mpc->interval, trace.descent_passes(), trace.steps.size(),
              100.0 * trace.descent_pass_rate());
  std::printf("  CLF spot check on X_f: %d/%d samples satisfied; artifacts in %s\n", trace.clf.satisfied, trace.clf.samples,
              f.outputs.dir.c_str());
  if (trace.infeasible_at) {
    std::fprintf(stderr, "error: step %d found no feasible sample: %s\n", *trace.infeasible_at, trace.diagnostics.c_str());
    return kExitInfeasible;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char ** argv)
{
  CLI::App app{"Semi-infinite-program solver for basis-parameterized linear-quadratic optimal control"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  Overrides o;
  std::string file, bench_name, alpha_path;
  double tol = 1e-3;
  std::optional<int> steps;
  std::optional<double> interval;

  auto * solve = app.add_subcommand("solve", "validate, run simulated annealing, verify on a dense grid and write artifacts");
  solve->add_option("file", file, "problem definition (TOML)")->required();
  add_common(*solve, o);

  auto * bench = app.add_subcommand("bench", "write a bundled benchmark problem to the output directory and solve it");
  bench->add_option("name", bench_name, "bryson-denham or pendulum")->required();
  add_common(*bench, o);

  auto * verify = app.add_subcommand("verify", "check coefficients from alpha.csv against every constraint on a dense grid");
  verify->add_option("file", file, "problem definition (TOML)")->required();
  verify->add_option("--alpha", alpha_path, "coefficient file written by solve")->required();
  verify->add_option("--tol", tol, "violation tolerance for the exit status");
  add_common(*verify, o);

  auto * mpc = app.add_subcommand("mpc", "receding-horizon closed loop with descent residuals");
  mpc->add_option("file", file, "problem definition (TOML)")->required();
  mpc->add_option("--steps", steps, "closed-loop steps")->check(CLI::PositiveNumber);
  mpc->add_option("--interval", interval, "resampling interval h")->check(CLI::PositiveNumber);
  add_common(*mpc, o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success & e) {
    return app.exit(e);
  } catch (const CLI::ParseError & e) {
    app.exit(e);
    return kExitInput;
  }

  try {
    if (*solve) { return run_solve(parse_problem_file(file), o, "solve " + file); }
    if (*bench) {
      ProblemFile f = benchmarks::by_name(bench_name);
      if (o.out_dir) { f.outputs.dir = *o.out_dir; }
      fs::create_directories(f.outputs.dir);
      ProblemFile materialized = f;
      apply(materialized, o);
      std::ofstream(fs::path(f.outputs.dir) / "problem.toml", std::ios::binary) << write_problem_string(materialized);
      return run_solve(std::move(f), o, "bench " + bench_name);
    }
    if (*verify) { return run_verify(parse_problem_file(file), o, alpha_path, tol); }
    if (*mpc) { return run_mpc(parse_problem_file(file), o, steps, interval, "mpc " + file); }
  } catch (const ValidationError & e) {
    std::fprintf(stderr, "input error: %s\n", e.what());
    return kExitInput;
  } catch (const DomainError & e) {
    std::fprintf(stderr, "input error: %s\n", e.what());
    return kExitInput;
  } catch (const InfeasibleError & e) {
    std::fprintf(stderr, "infeasible: %s\n", e.what());
    return kExitInfeasible;
  } catch (const NumericalError & e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return kExitNumerical;
  } catch (const std::exception & e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitNumerical;
  }
  return kExitInput;
}

#pragma once

/**
 * @file
 * @brief validate -> run_sa -> verify_dense, the sequence behind the `solve` command.
 */

#include <optional>
#include <string>

#include "annealing.hpp"
#include "error.hpp"
#include "problem_file.hpp"
#include "validate.hpp"
#include "verify.hpp"

namespace sipocp {

struct SolveOutcome
{
  ValidationReport validation;
  SolveReport sa;
  ViolationReport violation;
  std::optional<double> oracle_value;
  /// oracle grid intervals, 0 when no oracle was run
  int oracle_grid = 0;
  std::vector<std::string> warnings;
};

struct SolveOptions
{
  /// run the collocation oracle on this many intervals
  std::optional<int> oracle_grid;
  ValidationOptions validation;
};

/**
 * @throws ValidationError when the problem data fails validation
 * @throws InfeasibleError when no sampled QP is feasible
 */
inline SolveOutcome solve_problem(const ProblemFile & file, const SolveOptions & options = {})
{
  SolveOutcome out;
  out.validation = validate(file.problem, options.validation);
  require_valid(out.validation);

  const Transcription tr(file.problem);
  out.sa = run_sa(tr, file.sa);
  out.violation = verify_dense(file.problem, tr.propagator(), out.sa.best_alpha, file.outputs.grid,
                               file.outputs.certified_bound);

  const auto & box = file.problem.control_box;
  if (file.problem.control_box_is_default &&
      out.violation.max_abs_control >= (1.0 - 1e-6) * std::min(box.upper.minCoeff(), -box.lower.maxCoeff())) {
    out.warnings.push_back("default control bound is active at the solution; set constraints.control explicitly");
  }
  if (out.sa.qp_stats.infeasible > 0) {
    out.warnings.push_back(std::to_string(out.sa.qp_stats.infeasible) + " sampled QPs were infeasible and rejected");
  }
  if (options.oracle_grid) {
    out.oracle_grid = *options.oracle_grid;
    out.oracle_value = oracle_collocation(file.problem, *options.oracle_grid).value;
  }
  return out;
}

}  // namespace sipocp

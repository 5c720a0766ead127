#pragma once

/**
 * @file
 * @brief Data checks for OcpProblem and a best-effort Slater probe.
 */

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "error.hpp"
#include "problem.hpp"
#include "qp.hpp"
#include "transcription.hpp"

namespace sipocp {

struct ValidationReport
{
  bool valid = true;
  /// first offending field of the first error
  std::string field;
  std::vector<std::string> errors;
  std::vector<std::string> warnings;
  std::vector<std::string> notes;

  bool slater_verified = false;
  /// strict margin of the probe point on the sampled rows, in the units of the constraint data
  double slater_margin = 0.0;
  std::optional<ControlCoefficients> slater_point;

  void error(const std::string & f, const std::string & msg)
  {
    if (valid) { field = f; }
    valid = false;
    errors.push_back(f + ": " + msg);
  }
};

struct ValidationOptions
{
  /// sample count of the uniform grid used by the Slater probe
  int slater_grid = 64;
  bool run_slater_probe = true;
};

namespace detail {

inline std::string format_double(double v)
{
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

inline void check_symmetric_definite(ValidationReport & rep, const Eigen::MatrixXd & X, const std::string & field,
                                     bool strict)
{
  const std::string name = field.substr(field.rfind('.') + 1);
  const double scale = std::max(1.0, X.cwiseAbs().maxCoeff());
  if ((X - X.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
    rep.error(field, name + " must be symmetric");
    return;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(X, Eigen::EigenvaluesOnly);
  const double lmin = es.eigenvalues().minCoeff();
  if (strict && lmin < 1e-10) {
    rep.error(field, name + " must be positive definite (smallest eigenvalue " + format_double(lmin) + ")");
  } else if (!strict && lmin < -1e-10) {
    rep.error(field, name + " must be positive semidefinite (smallest eigenvalue " + format_double(lmin) + ")");
  }
}

/**
 * Approximate support value max c^T z over a polytope via the regularized QP
 * min delta |z|^2 - c^T z. Returns nullopt when the set is empty or looks unbounded.
 */
inline std::optional<double> support_value(const Polytope & P, const Eigen::VectorXd & c)
{
  constexpr double delta = 1e-9;
  const Eigen::Index d = c.size();
  QpModel model;
  model.hessian = delta * Eigen::MatrixXd::Identity(d, d);
  model.linear = -c;
  model.A_in = P.H;
  model.b_in = P.h;
  model.A_eq = P.Heq;
  model.b_eq = P.heq;
  const auto sol = solve_qp(model);
  if (!sol.optimal() || sol.x.norm() > 1e6) { return std::nullopt; }
  return c.dot(sol.x);
}

inline void check_set_interior(ValidationReport & rep, const Polytope & P, int d, const std::string & field,
                               const std::string & label)
{
  try {
    P.check(d, field);
  } catch (const ValidationError & e) {
    rep.error(field, e.message());
    return;
  }
  if (P.has_equalities()) {
    // consistency of the equality rows
    const Eigen::VectorXd z = P.Heq.completeOrthogonalDecomposition().solve(P.heq);
    if ((P.Heq * z - P.heq).cwiseAbs().maxCoeff() > 1e-9 * std::max(1.0, P.heq.cwiseAbs().maxCoeff())) {
      rep.error(field, label + " equality rows are inconsistent (empty set)");
      return;
    }
    if (!P.has_inequalities()) {
      rep.notes.push_back(field + ": interior check skipped for equality-only " + label + " set");
      return;
    }
    rep.warnings.push_back(field + ": " + label + " set has equality rows; interior requirement waived");
    if (!support_value(P, Eigen::VectorXd::Zero(d))) { rep.error(field, label + " set is empty"); }
    return;
  }
  if (P.has_inequalities() && (P.h.array() <= 0.0).any()) {
    rep.error(field, "0 must lie in the interior of the " + label + " set (H 0 < h)");
  }
}

}  // namespace detail

/**
 * @brief Slater probe: look for alpha strictly satisfying every inequality row sampled
 * on a uniform grid (equality rows exactly).
 *
 * Solves the phase-1 problem max s s.t. H x(t) + s <= h on the grid rows (s in the units of
 * the original rows, so it does not shrink when e^{At} is large), A_eq a = b_eq and s <= 1,
 * with a small quadratic regularization so the strictly convex QP solver applies. Success
 * is certified by the returned point itself.
 */
inline void slater_probe(ValidationReport & rep, const OcpProblem & problem, int grid)
{
  Transcription tr(problem);
  const int n = tr.num_samples();
  // the sampled model only needs the rows, so stack several n-point sample vectors
  std::vector<QpModel> blocks;
  int remaining = grid;
  int block = 0;
  while (remaining > 0) {
    TimeSampleVector xi;
    xi.times.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      const int k = std::min(block * n + i, grid - 1);
      xi.times[static_cast<std::size_t>(i)] = grid == 1 ? 0.0 : problem.horizon() * k / (grid - 1);
    }
    blocks.push_back(tr.assemble(xi));
    remaining -= n;
    ++block;
  }
  Eigen::Index rows_in = 1, rows_eq = 0;
  for (const auto & b : blocks) {
    rows_in += b.A_in.rows();
    rows_eq += b.A_eq.rows();
  }
  constexpr double delta = 1e-8;
  QpModel phase1;
  phase1.hessian = delta * Eigen::MatrixXd::Identity(n + 1, n + 1);
  phase1.linear = Eigen::VectorXd::Zero(n + 1);
  phase1.linear(n) = -1.0;
  phase1.A_in = Eigen::MatrixXd::Zero(rows_in, n + 1);
  phase1.b_in = Eigen::VectorXd::Zero(rows_in);
  phase1.A_eq = Eigen::MatrixXd::Zero(rows_eq, n + 1);
  phase1.b_eq = Eigen::VectorXd::Zero(rows_eq);
  Eigen::Index ri = 0, re = 0;
  for (const auto & b : blocks) {
    for (Eigen::Index r = 0; r < b.A_in.rows(); ++r, ++ri) {
      phase1.A_in.row(ri).head(n) = b.A_in.row(r);
      // zero rows constrain only x0 and cannot host slack
      phase1.A_in(ri, n) = b.A_in.row(r).squaredNorm() > 0.0 ? 1.0 / b.in_scale(r) : 0.0;
      phase1.b_in(ri) = b.b_in(r);
    }
    for (Eigen::Index r = 0; r < b.A_eq.rows(); ++r, ++re) {
      phase1.A_eq.row(re).head(n) = b.A_eq.row(r);
      phase1.b_eq(re) = b.b_eq(r);
    }
  }
  phase1.A_in(ri, n) = 1.0;
  phase1.b_in(ri) = 1.0;

  const auto sol = solve_qp(phase1);
  if (!sol.optimal()) {
    rep.warnings.push_back("Slater unverified: sampled constraints admit no feasible coefficients");
    return;
  }
  // re-check the margin directly on the stacked rows
  const Eigen::VectorXd a = sol.x.head(n);
  double margin = sol.x(n);
  for (const auto & b : blocks) {
    if (b.A_in.rows() > 0) { margin = std::min(margin, (b.in_scale.array() * (b.b_in - b.A_in * a).array()).minCoeff()); }
  }
  rep.slater_margin = margin;
  if (margin > 1e-9) {
    rep.slater_verified = true;
    rep.slater_point = ControlCoefficients::from_vec(a, problem.input_dim(), problem.basis.size());
  } else {
    rep.warnings.push_back("Slater unverified: no strictly feasible point on the " + std::to_string(grid) +
                           "-point grid");
  }
}

/// Check data assumptions; deterministic and side-effect free.
inline ValidationReport validate(const OcpProblem & p, const ValidationOptions & options = {})
{
  ValidationReport rep;
  try {
    p.system.check();
  } catch (const ValidationError & e) {
    rep.error(e.field(), e.message());
    return rep;
  }
  const int d = p.state_dim(), m = p.input_dim();

  if (p.x0.size() != d || !p.x0.allFinite()) { rep.error("x0", "must be a finite vector of length " + std::to_string(d)); }
  if (p.cost.Q.rows() != d || p.cost.Q.cols() != d) {
    rep.error("cost.Q", "must be " + std::to_string(d) + "x" + std::to_string(d));
  } else {
    detail::check_symmetric_definite(rep, p.cost.Q, "cost.Q", false);
  }
  if (p.cost.R.rows() != m || p.cost.R.cols() != m) {
    rep.error("cost.R", "must be " + std::to_string(m) + "x" + std::to_string(m));
  } else {
    detail::check_symmetric_definite(rep, p.cost.R, "cost.R", true);
  }
  if (p.cost.Pf.rows() != d || p.cost.Pf.cols() != d) {
    rep.error("cost.Pf", "must be " + std::to_string(d) + "x" + std::to_string(d));
  } else {
    detail::check_symmetric_definite(rep, p.cost.Pf, "cost.Pf", false);
  }

  detail::check_set_interior(rep, p.state_set, d, "constraints.state", "state");
  detail::check_set_interior(rep, p.terminal_set, d, "constraints.terminal", "terminal");

  const auto & box = p.control_box;
  if (box.lower.size() != m || box.upper.size() != m) {
    rep.error("constraints.control", "bounds must have " + std::to_string(m) + " entries");
  } else if (!box.lower.allFinite() || !box.upper.allFinite()) {
    rep.error("constraints.control", "bounds must be finite (compact control set)");
  } else if ((box.lower.array() >= box.upper.array()).any()) {
    rep.error("constraints.control", "every interval needs lower < upper (nonempty interior)");
  }
  if (p.control_box_is_default) {
    rep.notes.push_back("constraints.control: no control bound given; using |u_i| <= " +
                        detail::format_double(kDefaultControlBound) + " (checked inactive after the solve)");
  }
  if (!rep.valid) { return rep; }

  if (p.state_set.max_violation(p.x0) > 0.0) {
    rep.warnings.push_back("x0 lies outside the state constraint set; every sampled problem containing t = 0 is infeasible");
  }

  // terminal set inside state set
  if (p.state_set.has_inequalities() && !p.terminal_set.empty_description()) {
    for (Eigen::Index r = 0; r < p.state_set.H.rows(); ++r) {
      const auto s = detail::support_value(p.terminal_set, p.state_set.H.row(r).transpose());
      if (!s) {
        rep.warnings.push_back("constraints.terminal: containment in the state set not checked (set unbounded?)");
        break;
      }
      if (*s > p.state_set.h(r) + 1e-7 * std::max(1.0, std::abs(p.state_set.h(r)))) {
        rep.error("constraints.terminal", "terminal set is not contained in the state set (row " + std::to_string(r) + ")");
        return rep;
      }
    }
  } else if (p.terminal_set.empty_description()) {
    rep.warnings.push_back("constraints.terminal: no terminal constraint (X_f = R^d is not compact)");
  }

  if (options.run_slater_probe) {
    try {
      slater_probe(rep, p, options.slater_grid);
    } catch (const Error & e) {
      rep.warnings.push_back(std::string("Slater unverified: ") + e.what());
    }
  }
  return rep;
}

/// Throw ValidationError for the first error in the report.
inline void require_valid(const ValidationReport & rep)
{
  if (!rep.valid) {
    std::string msg = rep.errors.front();
    const auto pos = msg.find(": ");
    if (pos != std::string::npos) { msg = msg.substr(pos + 2); }
    throw ValidationError(msg, rep.field);
  }
}

}  // namespace sipocp

#pragma once

/**
 * @file
 * @brief Post-hoc checks of a recovered trajectory against the continuous-time constraints,
 * and a dense collocation oracle for the optimal value.
 */

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "dynamics.hpp"
#include "error.hpp"
#include "expm.hpp"
#include "parallel.hpp"
#include "problem.hpp"
#include "qp.hpp"
#include "quadrature.hpp"

namespace sipocp {

/// Trajectory sampled at grid_n + 1 equispaced times on [0, T].
struct DenseTrajectory
{
  Eigen::VectorXd times;
  /// d x (grid_n + 1)
  Eigen::MatrixXd states;
  /// m x (grid_n + 1)
  Eigen::MatrixXd controls;
};

/**
 * @brief Sweep x(t_k) forward on a uniform grid.
 *
 * Each step applies e^{A dt} and a 20-node Gauss-Legendre panel for the forcing term; the
 * panel kernels are shared because the grid is uniform.
 */
inline DenseTrajectory dense_trajectory(const Propagator & prop, const Eigen::VectorXd & x0,
                                        const ControlCoefficients & c, int grid_n)
{
  if (grid_n < 1) { throw DomainError("grid must have at least one interval"); }
  prop.check_shapes(x0, c);
  const auto & sys = prop.system();
  const double T = prop.horizon();
  const double dt = T / grid_n;
  const int d = prop.state_dim(), m = prop.input_dim();
  const GaussLegendreRule rule = gauss_legendre(20);
  const Eigen::MatrixXd step_exp = matrix_exponential(sys.A, dt);
  std::vector<Eigen::MatrixXd> kernels;
  for (double x : rule.nodes) { kernels.emplace_back(matrix_exponential(sys.A, dt - 0.5 * dt * (x + 1.0)) * sys.B); }

  DenseTrajectory tr;
  tr.times.resize(grid_n + 1);
  tr.states.resize(d, grid_n + 1);
  tr.controls.resize(m, grid_n + 1);
  Eigen::VectorXd x = x0;
  for (int k = 0; k <= grid_n; ++k) {
    const double t = k == grid_n ? T : k * dt;
    tr.times(k) = t;
    tr.states.col(k) = x;
    tr.controls.col(k) = prop.control_at(c, t);
    if (k == grid_n) { break; }
    Eigen::VectorXd next = step_exp * x;
    for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
      const double tau = t + 0.5 * dt * (rule.nodes[q] + 1.0);
      next.noalias() += 0.5 * dt * rule.weights[q] * kernels[q] * prop.control_at(c, tau);
    }
    x = next;
  }
  return tr;
}

struct ViolationReport
{
  int grid_points = 0;
  /// max over grid times and state rows of H x(t) - h (positive = violated)
  double max_state_violation = -std::numeric_limits<double>::infinity();
  double argmax_time = 0.0;
  /// max box excess of u(t) over the grid
  double max_control_violation = -std::numeric_limits<double>::infinity();
  /// max(H_f x(T) - h_f, |E_f x(T) - e_f|); 0 when X_f = R^d
  double terminal_residual = 0.0;
  /// upper bound on the state violation between grid points
  std::optional<double> certified_bound;
  /// max |u_i(t)| on the grid, used to confirm the default box stayed inactive
  double max_abs_control = 0.0;

  bool feasible(double tol) const
  {
    return max_state_violation <= tol && max_control_violation <= tol && terminal_residual <= tol;
  }
};

/// Evaluate every constraint row at grid_n + 1 equispaced times.
inline ViolationReport verify_trajectory(const OcpProblem & p, const DenseTrajectory & tr, bool certified = false)
{
  ViolationReport rep;
  const Eigen::Index npts = tr.times.size();
  rep.grid_points = static_cast<int>(npts);
  const auto & X = p.state_set;
  const bool has_rows = X.has_inequalities() || X.has_equalities();
  if (!has_rows) { rep.max_state_violation = 0.0; }
  std::vector<double> deriv_bound(static_cast<std::size_t>(X.H.rows()), 0.0);
  for (Eigen::Index k = 0; k < npts; ++k) {
    const Eigen::VectorXd x = tr.states.col(k);
    const Eigen::VectorXd u = tr.controls.col(k);
    if (has_rows) {
      const double v = X.max_violation(x);
      if (v > rep.max_state_violation) {
        rep.max_state_violation = v;
        rep.argmax_time = tr.times(k);
      }
    }
    rep.max_control_violation = std::max(rep.max_control_violation, p.control_box.max_violation(u));
    rep.max_abs_control = std::max(rep.max_abs_control, u.cwiseAbs().maxCoeff());
    if (certified && X.has_inequalities()) {
      const Eigen::VectorXd xdot = p.system.A * x + p.system.B * u;
      for (Eigen::Index r = 0; r < X.H.rows(); ++r) {
        auto & b = deriv_bound[static_cast<std::size_t>(r)];
        b = std::max(b, std::abs(X.H.row(r).dot(xdot)));
      }
    }
  }
  if (!p.terminal_set.empty_description()) {
    rep.terminal_residual = p.terminal_set.max_violation(tr.states.col(npts - 1));
  }
  if (certified) {
    const double half_gap = npts > 1 ? 0.5 * (tr.times(npts - 1) - tr.times(0)) / static_cast<double>(npts - 1) : 0.0;
    // equality rows are reported as measured; inequality rows get the Lipschitz inflation
    double bound = X.has_equalities() ? rep.max_state_violation : -std::numeric_limits<double>::infinity();
    for (Eigen::Index r = 0; r < X.H.rows(); ++r) {
      const double on_grid = (X.H.row(r) * tr.states).maxCoeff() - X.h(r);
      bound = std::max(bound, on_grid + half_gap * deriv_bound[static_cast<std::size_t>(r)]);
    }
    rep.certified_bound = has_rows ? bound : 0.0;
  }
  return rep;
}

/// Dense constraint check of the trajectory generated by alpha from p.x0.
inline ViolationReport verify_dense(const OcpProblem & p, const Propagator & prop, const ControlCoefficients & alpha,
                                    int grid_n = 10000, bool certified = false)
{
  if (grid_n < 2) { throw DomainError("verification grid needs grid_n >= 2"); }
  return verify_trajectory(p, dense_trajectory(prop, p.x0, alpha, grid_n), certified);
}

inline ViolationReport verify_dense(const OcpProblem & p, const ControlCoefficients & alpha, int grid_n = 10000,
                                    bool certified = false)
{
  return verify_dense(p, Propagator(p.system, p.basis), alpha, grid_n, certified);
}

struct OracleResult
{
  double value = 0.0;
  /// grid times, states and piecewise-linear control nodes
  DenseTrajectory trajectory;
  int qp_iterations = 0;
};

/**
 * @brief Dense direct-collocation estimate of the optimal value.
 *
 * Controls are piecewise linear between grid nodes and the state recursion uses the exact
 * first-order-hold discretization, so x_k is exact for that control. The cost uses the
 * trapezoidal rule on the nodes and every constraint row is imposed at every node.
 *
 * @throws InfeasibleError when the discretized QP has no feasible point
 */
inline OracleResult oracle_collocation(const OcpProblem & p, int grid_n)
{
  if (grid_n < 10) { throw DomainError("collocation oracle needs grid_n >= 10"); }
  const int d = p.state_dim(), m = p.input_dim();
  const int nodes = grid_n + 1;
  const Eigen::Index nv = static_cast<Eigen::Index>(m) * nodes;
  const double T = p.horizon();
  const double dt = T / grid_n;

  // exp of [[A, B, 0], [0, 0, I/dt], [0, 0, 0]] dt gives Phi, Gamma_0 + Gamma_1 and Gamma_1
  Eigen::MatrixXd aug = Eigen::MatrixXd::Zero(d + 2 * m, d + 2 * m);
  aug.topLeftCorner(d, d) = p.system.A * dt;
  aug.block(0, d, d, m) = p.system.B * dt;
  aug.block(d, d + m, m, m) = Eigen::MatrixXd::Identity(m, m);
  const Eigen::MatrixXd E = matrix_exponential(aug);
  const Eigen::MatrixXd Phi = E.topLeftCorner(d, d);
  const Eigen::MatrixXd Gamma1 = E.block(0, d + m, d, m);
  const Eigen::MatrixXd Gamma0 = E.block(0, d, d, m) - Gamma1;

  // x_k = F_k x0 + G_k U with U = (u_0, ..., u_n) stacked node-major
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(d) * nodes, nv);
  Eigen::MatrixXd F(static_cast<Eigen::Index>(d) * nodes, d);
  F.topRows(d) = Eigen::MatrixXd::Identity(d, d);
  for (int k = 1; k < nodes; ++k) {
    const Eigen::Index r = static_cast<Eigen::Index>(k) * d;
    // only columns of u_0 .. u_{k-1} are nonzero in G_{k-1}
    const Eigen::Index used = static_cast<Eigen::Index>(k) * m;
    G.block(r, 0, d, used).noalias() = Phi * G.block(r - d, 0, d, used);
    G.block(r, static_cast<Eigen::Index>(k - 1) * m, d, m) += Gamma0;
    G.block(r, static_cast<Eigen::Index>(k) * m, d, m) += Gamma1;
    F.middleRows(r, d).noalias() = Phi * F.middleRows(r - d, d);
  }
  const Eigen::VectorXd free = F * p.x0;

  QpModel model;
  model.hessian = Eigen::MatrixXd::Zero(nv, nv);
  model.linear = Eigen::VectorXd::Zero(nv);
  model.constant = 0.0;
  auto weight = [&](int k) { return (k == 0 || k == grid_n) ? 0.5 * dt : dt; };
  for (int k = 0; k < nodes; ++k) {
    model.hessian.block(static_cast<Eigen::Index>(k) * m, static_cast<Eigen::Index>(k) * m, m, m) += weight(k) * p.cost.R;
  }
  auto add_state_quadratic = [&](const Eigen::MatrixXd & W, int k, double w) {
    const Eigen::Index r = static_cast<Eigen::Index>(k) * d;
    const Eigen::Index used = static_cast<Eigen::Index>(k + 1) * m;
    const auto Gk = G.block(r, 0, d, used);
    const Eigen::VectorXd fk = free.segment(r, d);
    model.hessian.topLeftCorner(used, used).noalias() += w * Gk.transpose() * W * Gk;
    model.linear.head(used).noalias() += 2.0 * w * Gk.transpose() * (W * fk);
    model.constant += w * fk.dot(W * fk);
  };
  if (p.cost.Q.cwiseAbs().maxCoeff() > 0.0) {
    for (int k = 0; k < nodes; ++k) { add_state_quadratic(p.cost.Q, k, weight(k)); }
  }
  if (p.cost.Pf.cwiseAbs().maxCoeff() > 0.0) { add_state_quadratic(p.cost.Pf, grid_n, 1.0); }
  model.hessian = 0.5 * (model.hessian + model.hessian.transpose()).eval();

  // constraint rows: state set at every node, control box at every node, terminal set at x_n
  const auto & X = p.state_set;
  const auto & Xf = p.terminal_set;
  const Eigen::Index kin = X.H.rows(), keq = X.Heq.rows();
  const Eigen::Index rows_in = nodes * (kin + 2 * m) + Xf.H.rows();
  const Eigen::Index rows_eq = nodes * keq + Xf.Heq.rows();
  model.A_in = Eigen::MatrixXd::Zero(rows_in, nv);
  model.b_in = Eigen::VectorXd::Zero(rows_in);
  model.A_eq = Eigen::MatrixXd::Zero(rows_eq, nv);
  model.b_eq = Eigen::VectorXd::Zero(rows_eq);
  Eigen::Index ri = 0, re = 0;
  for (int k = 0; k < nodes; ++k) {
    const Eigen::Index r = static_cast<Eigen::Index>(k) * d;
    const auto Gk = G.middleRows(r, d);
    const Eigen::VectorXd fk = free.segment(r, d);
    if (kin > 0) {
      model.A_in.middleRows(ri, kin).noalias() = X.H * Gk;
      model.b_in.segment(ri, kin) = X.h - X.H * fk;
      ri += kin;
    }
    if (keq > 0 && k > 0) {
      model.A_eq.middleRows(re, keq).noalias() = X.Heq * Gk;
      model.b_eq.segment(re, keq) = X.heq - X.Heq * fk;
      re += keq;
    }
    for (int i = 0; i < m; ++i) {
      const Eigen::Index col = static_cast<Eigen::Index>(k) * m + i;
      model.A_in(ri, col) = 1.0;
      model.b_in(ri++) = p.control_box.upper(i);
      model.A_in(ri, col) = -1.0;
      model.b_in(ri++) = -p.control_box.lower(i);
    }
  }
  if (keq > 0 && X.max_violation(p.x0) > 1e-9) {
    throw InfeasibleError("collocation oracle: x0 violates the state equality rows");
  }
  {
    const Eigen::Index r = static_cast<Eigen::Index>(grid_n) * d;
    const auto Gn = G.middleRows(r, d);
    const Eigen::VectorXd fn = free.segment(r, d);
    if (Xf.H.rows() > 0) {
      model.A_in.middleRows(ri, Xf.H.rows()).noalias() = Xf.H * Gn;
      model.b_in.segment(ri, Xf.H.rows()) = Xf.h - Xf.H * fn;
      ri += Xf.H.rows();
    }
    if (Xf.Heq.rows() > 0) {
      model.A_eq.middleRows(re, Xf.Heq.rows()).noalias() = Xf.Heq * Gn;
      model.b_eq.segment(re, Xf.Heq.rows()) = Xf.heq - Xf.Heq * fn;
      re += Xf.Heq.rows();
    }
  }
  model.A_eq.conservativeResize(re, Eigen::NoChange);
  model.b_eq.conservativeResize(re);

  const QpSolution sol = solve_qp(model);
  if (!sol.optimal()) {
    throw InfeasibleError(std::string("collocation oracle failed: QP status ") + to_string(sol.status));
  }

  OracleResult out;
  out.value = sol.objective;
  out.qp_iterations = sol.iterations;
  out.trajectory.times = Eigen::VectorXd::LinSpaced(nodes, 0.0, T);
  out.trajectory.states.resize(d, nodes);
  out.trajectory.controls.resize(m, nodes);
  const Eigen::VectorXd xs = free + G * sol.x;
  for (int k = 0; k < nodes; ++k) {
    out.trajectory.states.col(k) = xs.segment(static_cast<Eigen::Index>(k) * d, d);
    out.trajectory.controls.col(k) = sol.x.segment(static_cast<Eigen::Index>(k) * m, m);
  }
  return out;
}

}  // namespace sipocp

#pragma once

/**
 * @file
 * @brief LTI propagation x(t) = e^{At} x0 + M(t) vec(alpha) with a cached time grid.
 */

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "basis.hpp"
#include "error.hpp"
#include "expm.hpp"
#include "quadrature.hpp"

namespace sipocp {

/// x' = A x + B u.
struct LtiSystem
{
  Eigen::MatrixXd A;
  Eigen::MatrixXd B;

  int state_dim() const noexcept { return static_cast<int>(A.rows()); }
  int input_dim() const noexcept { return static_cast<int>(B.cols()); }

  void check() const
  {
    if (A.rows() == 0 || A.rows() != A.cols()) { throw ValidationError("A must be a nonempty square matrix", "system.A"); }
    if (B.rows() != A.rows() || B.cols() == 0) {
      throw ValidationError("B must have d rows and at least one column", "system.B");
    }
    if (!A.allFinite()) { throw ValidationError("non-finite entry", "system.A"); }
    if (!B.allFinite()) { throw ValidationError("non-finite entry", "system.B"); }
  }
};

/**
 * @brief Coefficient matrix alpha (m x N) of u(t) = alpha Psi(t).
 *
 * The flattened vector is channel-major: (alpha_11 .. alpha_1N, alpha_21 .. alpha_2N, ...).
 * Every Kronecker-structured term in the transcription relies on this layout.
 */
struct ControlCoefficients
{
  Eigen::MatrixXd alpha;

  static ControlCoefficients zero(int m, int n) { return {Eigen::MatrixXd::Zero(m, n)}; }

  static ControlCoefficients from_vec(const Eigen::VectorXd & v, int m, int n)
  {
    if (v.size() != static_cast<Eigen::Index>(m) * n) { throw DomainError("coefficient vector has wrong length"); }
    ControlCoefficients c{Eigen::MatrixXd(m, n)};
    for (int i = 0; i < m; ++i) { c.alpha.row(i) = v.segment(static_cast<Eigen::Index>(i) * n, n).transpose(); }
    return c;
  }

  Eigen::VectorXd vec() const
  {
    Eigen::VectorXd v(alpha.size());
    for (Eigen::Index i = 0; i < alpha.rows(); ++i) { v.segment(i * alpha.cols(), alpha.cols()) = alpha.row(i).transpose(); }
    return v;
  }

  int channels() const noexcept { return static_cast<int>(alpha.rows()); }
  int basis_size() const noexcept { return static_cast<int>(alpha.cols()); }
};

/// Snapshot of the affine state map at one time instant.
struct PropagationOperator
{
  double time = 0.0;
  /// e^{A t}
  Eigen::MatrixXd expAt;
  /// d x (m N): M vec(alpha) = integral_0^t e^{A(t - tau)} B alpha Psi(tau) dtau
  Eigen::MatrixXd M;

  Eigen::VectorXd state(const Eigen::VectorXd & x0, const Eigen::VectorXd & alpha_vec) const
  {
    return expAt * x0 + M * alpha_vec;
  }
};

/**
 * @brief Propagation engine for one (system, basis) pair.
 *
 * Precomputes e^{A t_k} and M(t_k) on the panel grid t_k = k T / K with the recursion
 *   M(t_{k+1}) = e^{A h} M(t_k) + integral_{t_k}^{t_{k+1}} e^{A(t_{k+1} - tau)} B S(tau) dtau.
 * A query at arbitrary t continues from the nearest grid point below with one more
 * Gauss-Legendre panel, so results at sampled times are computed, not interpolated.
 *
 * Immutable after construction; concurrent queries are safe.
 */
class Propagator
{
public:
  Propagator(LtiSystem system, BasisSet basis, QuadratureOptions options = {})
      : system_(std::move(system)), basis_(std::move(basis)), options_(options)
  {
    system_.check();
    if (options_.nodes_per_panel < 1) { throw ValidationError("nodes_per_panel must be positive", "quadrature"); }
    panels_ = options_.panels > 0 ? options_.panels : basis_.suggested_panels();
    rule_ = gauss_legendre(options_.nodes_per_panel);
    step_ = basis_.horizon() / panels_;
    build_grid();
  }

  const LtiSystem & system() const noexcept { return system_; }
  const BasisSet & basis() const noexcept { return basis_; }
  double horizon() const noexcept { return basis_.horizon(); }
  int panels() const noexcept { return panels_; }
  int nodes_per_panel() const noexcept { return options_.nodes_per_panel; }
  int state_dim() const noexcept { return system_.state_dim(); }
  int input_dim() const noexcept { return system_.input_dim(); }
  /// n_var = m N
  int num_coefficients() const noexcept { return system_.input_dim() * basis_.size(); }

  Eigen::MatrixXd exp_at(double t) const { return matrix_exponential(system_.A, basis_.check_time(t)); }

  PropagationOperator at(double t) const
  {
    t = basis_.check_time(t);
    PropagationOperator op;
    op.time = t;
    op.expAt = matrix_exponential(system_.A, t);
    const int k = std::min(static_cast<int>(std::floor(t / step_)), panels_);
    const double tk = k * step_;
    if (k == panels_ || t - tk <= 0.0) {
      op.M = forced_[static_cast<std::size_t>(k)];
    } else {
      op.M = matrix_exponential(system_.A, t - tk) * forced_[static_cast<std::size_t>(k)] + local_forced(tk, t);
    }
    return op;
  }

  /// S(t) = I_m (x) Psi(t)^T, so that u(t) = S(t) vec(alpha).
  Eigen::MatrixXd control_matrix(double t) const
  {
    const int m = input_dim(), n = basis_.size();
    const Eigen::VectorXd psi = basis_.eval(t);
    Eigen::MatrixXd S = Eigen::MatrixXd::Zero(m, static_cast<Eigen::Index>(m) * n);
    for (int i = 0; i < m; ++i) { S.block(i, static_cast<Eigen::Index>(i) * n, 1, n) = psi.transpose(); }
    return S;
  }

  Eigen::VectorXd control_at(const ControlCoefficients & c, double t) const { return c.alpha * basis_.eval(t); }

  Eigen::VectorXd state_at(const Eigen::VectorXd & x0, const ControlCoefficients & c, double t) const
  {
    check_shapes(x0, c);
    return at(t).state(x0, c.vec());
  }

  /// Composite Gauss-Legendre points on [0, T] matching the propagation grid.
  QuadraturePoints quadrature_points() const { return composite_gauss_legendre(0.0, horizon(), panels_, rule_); }

  void check_shapes(const Eigen::VectorXd & x0, const ControlCoefficients & c) const
  {
    if (x0.size() != state_dim()) { throw DomainError("initial state has wrong dimension"); }
    if (c.channels() != input_dim() || c.basis_size() != basis_.size()) {
      throw DomainError("coefficient matrix must be " + std::to_string(input_dim()) + "x" + std::to_string(basis_.size()));
    }
  }

private:
  /// integral_a^b e^{A(b - tau)} B S(tau) dtau with one Gauss-Legendre panel.
  Eigen::MatrixXd local_forced(double a, double b, const std::vector<Eigen::MatrixXd> * kernels = nullptr) const
  {
    const int d = state_dim(), m = input_dim(), n = basis_.size();
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(d, static_cast<Eigen::Index>(m) * n);
    Eigen::VectorXd psi(n);
    const double half = 0.5 * (b - a);
    for (std::size_t q = 0; q < rule_.nodes.size(); ++q) {
      const double tau = a + half * (rule_.nodes[q] + 1.0);
      const double w = half * rule_.weights[q];
      const Eigen::MatrixXd EB =
          kernels ? (*kernels)[q] : Eigen::MatrixXd(matrix_exponential(system_.A, b - tau) * system_.B);
      basis_.eval_into(tau, psi);
      for (int i = 0; i < m; ++i) {
        M.block(0, static_cast<Eigen::Index>(i) * n, d, n).noalias() += w * EB.col(i) * psi.transpose();
      }
    }
    return M;
  }

  void build_grid()
  {
    const int d = state_dim();
    const Eigen::MatrixXd step_exp = matrix_exponential(system_.A, step_);
    // e^{A (h - tau_q)} B is the same on every full panel
    std::vector<Eigen::MatrixXd> kernels;
    kernels.reserve(rule_.nodes.size());
    for (double x : rule_.nodes) {
      kernels.emplace_back(matrix_exponential(system_.A, step_ - 0.5 * step_ * (x + 1.0)) * system_.B);
    }
    forced_.resize(static_cast<std::size_t>(panels_) + 1);
    forced_[0] = Eigen::MatrixXd::Zero(d, num_coefficients());
    for (int k = 0; k < panels_; ++k) {
      const double tk = k * step_;
      forced_[static_cast<std::size_t>(k) + 1] =
          step_exp * forced_[static_cast<std::size_t>(k)] + local_forced(tk, tk + step_, &kernels);
      if (!forced_[static_cast<std::size_t>(k) + 1].allFinite()) {
        throw NumericalError("propagation operator overflowed on [0, T]");
      }
    }
  }

  LtiSystem system_;
  BasisSet basis_;
  QuadratureOptions options_;
  GaussLegendreRule rule_;
  int panels_ = 0;
  double step_ = 0.0;
  std::vector<Eigen::MatrixXd> forced_;
};

/// e^{A t}
inline Eigen::MatrixXd propagate_free(const LtiSystem & sys, double t) { return matrix_exponential(sys.A, t); }

inline PropagationOperator propagation_operator(const Propagator & prop, double t) { return prop.at(t); }

inline Eigen::VectorXd state_at(const Propagator & prop, const Eigen::VectorXd & x0, const ControlCoefficients & c, double t)
{
  return prop.state_at(x0, c, t);
}

}  // namespace sipocp

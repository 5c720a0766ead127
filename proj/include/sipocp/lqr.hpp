#pragma once

/**
 * @file
 * @brief Infinite-horizon LQR gain used as the terminal feedback g_F(z) = K z, and a
 * sampled check of the control-Lyapunov inequality for the terminal cost.
 */

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <random>
#include <string>

#include "error.hpp"
#include "problem.hpp"

namespace sipocp {

struct LqrGain
{
  /// u = K z
  Eigen::MatrixXd K;
  /// stabilizing solution of A'P + PA - P B R^{-1} B' P + Q = 0
  Eigen::MatrixXd P;
  /// regularization added to Q (0 if Q was used as given)
  double q_regularization = 0.0;
};

/**
 * @brief Stabilizing CARE solution by the matrix sign function of the Hamiltonian.
 *
 * A singular Q (for instance a pure control-energy cost) leaves imaginary-axis modes
 * undetectable, so such a Q is replaced by Q + 1e-6 I and the shift is recorded.
 *
 * @throws NumericalError when the sign iteration does not converge
 */
inline LqrGain lqr(const Eigen::MatrixXd & A, const Eigen::MatrixXd & B, const Eigen::MatrixXd & Q,
                   const Eigen::MatrixXd & R)
{
  const Eigen::Index d = A.rows();
  LqrGain out;
  Eigen::MatrixXd Qr = 0.5 * (Q + Q.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Qr, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < 1e-9 * std::max(1.0, Qr.cwiseAbs().maxCoeff())) {
    out.q_regularization = 1e-6;
    Qr += out.q_regularization * Eigen::MatrixXd::Identity(d, d);
  }
  const Eigen::MatrixXd Rinv = R.llt().solve(Eigen::MatrixXd::Identity(R.rows(), R.cols()));
  Eigen::MatrixXd Z(2 * d, 2 * d);
  Z << A, -B * Rinv * B.transpose(), -Qr, -A.transpose();

  bool converged = false;
  for (int it = 0; it < 100; ++it) {
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(Z);
    const double det = std::abs(lu.determinant());
    if (!(det > 0.0) || !std::isfinite(det)) { break; }
    const double c = std::pow(det, -1.0 / static_cast<double>(2 * d));
    const Eigen::MatrixXd next = 0.5 * (c * Z + lu.inverse() / c);
    const double change = (next - Z).norm() / std::max(1.0, next.norm());
    Z = next;
    if (change < 1e-13) {
      converged = true;
      break;
    }
  }
  if (!converged) { throw NumericalError("LQR: Hamiltonian sign iteration did not converge"); }

  // sign(H) [I; P] = -[I; P]
  Eigen::MatrixXd lhs(2 * d, d), rhs(2 * d, d);
  lhs << Z.topRightCorner(d, d), Z.bottomRightCorner(d, d) + Eigen::MatrixXd::Identity(d, d);
  rhs << -(Z.topLeftCorner(d, d) + Eigen::MatrixXd::Identity(d, d)), -Z.bottomLeftCorner(d, d);
  Eigen::MatrixXd P = lhs.colPivHouseholderQr().solve(rhs);
  out.P = 0.5 * (P + P.transpose());
  out.K = -Rinv * B.transpose() * out.P;
  if (!out.K.allFinite()) { throw NumericalError("LQR: gain is not finite"); }
  return out;
}

inline LqrGain lqr(const OcpProblem & p) { return lqr(p.system.A, p.system.B, p.cost.Q, p.cost.R); }

/// Outcome of checking <grad q_f(z), A z + B K z> <= -l(z, K z) on sampled terminal states.
struct ClfCheck
{
  int samples = 0;
  int satisfied = 0;
  /// max of lhs + l(z, Kz) over the samples (<= 0 means the inequality held everywhere)
  double worst_residual = -std::numeric_limits<double>::infinity();
  /// max control-box excess of K z over the samples
  double worst_control_excess = -std::numeric_limits<double>::infinity();

  bool holds() const noexcept { return samples > 0 && satisfied == samples; }
};

/**
 * @brief Sample points of X_f and evaluate the terminal-cost descent inequality.
 *
 * Points are drawn uniformly from the bounding box of the inequality rows and kept when
 * they satisfy every row; an equality-only X_f contributes its single point.
 */
inline ClfCheck check_clf(const OcpProblem & p, const Eigen::MatrixXd & K, int samples = 200, std::uint64_t seed = 0)
{
  ClfCheck out;
  const int d = p.state_dim();
  const auto & Xf = p.terminal_set;
  auto test_point = [&](const Eigen::VectorXd & z) {
    const Eigen::VectorXd u = K * z;
    const double lhs = 2.0 * z.dot(p.cost.Pf * (p.system.A * z + p.system.B * u));
    const double res = lhs + p.cost.stage(z, u);
    ++out.samples;
    if (res <= 1e-12 * std::max(1.0, z.squaredNorm())) { ++out.satisfied; }
    out.worst_residual = std::max(out.worst_residual, res);
    out.worst_control_excess = std::max(out.worst_control_excess, p.control_box.max_violation(u));
  };

  if (!Xf.has_inequalities()) {
    if (Xf.has_equalities()) { test_point(Xf.Heq.completeOrthogonalDecomposition().solve(Xf.heq)); }
    return out;
  }
  // bounding box from rows of the form +-e_i^T z <= c; other directions default to unit width
  Eigen::VectorXd lo = Eigen::VectorXd::Constant(d, -1.0), hi = Eigen::VectorXd::Constant(d, 1.0);
  for (Eigen::Index r = 0; r < Xf.H.rows(); ++r) {
    Eigen::Index j;
    const double a = Xf.H.row(r).cwiseAbs().maxCoeff(&j);
    if (a > 0.0 && std::abs(Xf.H.row(r).norm() - a) < 1e-12 * a) {
      if (Xf.H(r, j) > 0.0) { hi(j) = Xf.h(r) / Xf.H(r, j); } else { lo(j) = Xf.h(r) / Xf.H(r, j); }
    }
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int attempt = 0; attempt < 50 * samples && out.samples < samples; ++attempt) {
    Eigen::VectorXd z(d);
    for (int i = 0; i < d; ++i) { z(i) = lo(i) + (hi(i) - lo(i)) * unif(rng); }
    if (Xf.max_violation(z) <= 0.0) { test_point(z); }
  }
  return out;
}

}  // namespace sipocp

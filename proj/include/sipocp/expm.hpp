#pragma once

/**
 * @file
 * @brief Matrix exponential by scaling and squaring with the [13/13] Pade approximant.
 *
 * The scaling exponent s is the smallest integer with ||A t||_1 / 2^s <= theta_13, the
 * bound for which the degree-13 approximant is accurate to unit roundoff in double
 * precision (Higham 2005).
 */

#include <Eigen/Dense>

#include <cmath>

#include "error.hpp"

namespace sipocp {

namespace detail {

inline constexpr double kTheta13 = 5.371920351148152;

inline constexpr double kPade13[] = {
    64764752532480000.0, 32382376266240000.0, 7771770303897600.0, 1187353796428800.0, 129060195264000.0,
    10559470521600.0,    670442572800.0,      33522128640.0,      1323241920.0,       40840800.0,
    960960.0,            16380.0,             182.0,              1.0,
};

}  // namespace detail

/// e^{A t}; throws DomainError for non-finite input.
inline Eigen::MatrixXd matrix_exponential(const Eigen::MatrixXd & A, double t = 1.0)
{
  if (A.rows() != A.cols()) { throw DomainError("matrix_exponential: matrix is not square"); }
  if (!A.allFinite() || !std::isfinite(t)) { throw DomainError("matrix_exponential: non-finite input"); }
  const Eigen::Index n = A.rows();
  if (n == 0) { return Eigen::MatrixXd(0, 0); }

  Eigen::MatrixXd X = A * t;
  const double norm1 = X.cwiseAbs().colwise().sum().maxCoeff();
  if (norm1 == 0.0) { return Eigen::MatrixXd::Identity(n, n); }

  int squarings = 0;
  if (norm1 > detail::kTheta13) {
    squarings = std::max(0, static_cast<int>(std::ceil(std::log2(norm1 / detail::kTheta13))));
    X /= std::ldexp(1.0, squarings);
  }

  const auto & b = detail::kPade13;
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
  const Eigen::MatrixXd X2 = X * X;
  const Eigen::MatrixXd X4 = X2 * X2;
  const Eigen::MatrixXd X6 = X4 * X2;

  const Eigen::MatrixXd U_inner = b[13] * X6 + b[11] * X4 + b[9] * X2;
  const Eigen::MatrixXd U = X * (X6 * U_inner + b[7] * X6 + b[5] * X4 + b[3] * X2 + b[1] * I);
  const Eigen::MatrixXd V_inner = b[12] * X6 + b[10] * X4 + b[8] * X2;
  const Eigen::MatrixXd V = X6 * V_inner + b[6] * X6 + b[4] * X4 + b[2] * X2 + b[0] * I;

  Eigen::MatrixXd E = (V - U).partialPivLu().solve(V + U);
  for (int k = 0; k < squarings; ++k) { E = E * E; }
  if (!E.allFinite()) { throw NumericalError("matrix_exponential: overflow"); }
  return E;
}

}  // namespace sipocp

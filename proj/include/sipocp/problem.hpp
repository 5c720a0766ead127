#pragma once

/**
 * @file
 * @brief Data of the basis-parameterized optimal control problem.
 */

#include <Eigen/Dense>

#include <algorithm>
#include <limits>
#include <string>

#include "basis.hpp"
#include "dynamics.hpp"
#include "error.hpp"

namespace sipocp {

/// l(z, v) = z^T Q z + v^T R v and q_f(z) = z^T Pf z.
struct CostSpec
{
  Eigen::MatrixXd Q;
  Eigen::MatrixXd R;
  /// terminal weight (named Pf to keep it apart from the Gram matrix)
  Eigen::MatrixXd Pf;

  double stage(const Eigen::VectorXd & z, const Eigen::VectorXd & v) const { return z.dot(Q * z) + v.dot(R * v); }
  double terminal(const Eigen::VectorXd & z) const { return z.dot(Pf * z); }
};

/// {z : H z <= h, Heq z = heq}
struct Polytope
{
  Eigen::MatrixXd H;
  Eigen::VectorXd h;
  Eigen::MatrixXd Heq;
  Eigen::VectorXd heq;

  /// R^d (no rows).
  static Polytope whole(int dim)
  {
    return {Eigen::MatrixXd(0, dim), Eigen::VectorXd(0), Eigen::MatrixXd(0, dim), Eigen::VectorXd(0)};
  }

  /// |z_i| <= bound_i
  static Polytope symmetric_box(const Eigen::VectorXd & bound)
  {
    const Eigen::Index d = bound.size();
    Polytope p = whole(static_cast<int>(d));
    p.H.resize(2 * d, d);
    p.H << Eigen::MatrixXd::Identity(d, d), -Eigen::MatrixXd::Identity(d, d);
    p.h.resize(2 * d);
    p.h << bound, bound;
    return p;
  }

  /// {z}
  static Polytope point(const Eigen::VectorXd & z)
  {
    const Eigen::Index d = z.size();
    Polytope p = whole(static_cast<int>(d));
    p.Heq = Eigen::MatrixXd::Identity(d, d);
    p.heq = z;
    return p;
  }

  int dim() const noexcept { return static_cast<int>(std::max(H.cols(), Heq.cols())); }
  bool has_inequalities() const noexcept { return H.rows() > 0; }
  bool has_equalities() const noexcept { return Heq.rows() > 0; }
  bool empty_description() const noexcept { return H.rows() == 0 && Heq.rows() == 0; }

  /// Largest signed row residual: max(H z - h, |Heq z - heq|); <= 0 means z is inside.
  double max_violation(const Eigen::VectorXd & z) const
  {
    double v = -std::numeric_limits<double>::infinity();
    if (H.rows() > 0) { v = std::max(v, (H * z - h).maxCoeff()); }
    if (Heq.rows() > 0) { v = std::max(v, (Heq * z - heq).cwiseAbs().maxCoeff()); }
    return empty_description() ? 0.0 : v;
  }

  void check(int d, const std::string & field) const
  {
    if (H.rows() != h.size() || (H.rows() > 0 && H.cols() != d)) {
      throw ValidationError("inequality rows must be k x " + std::to_string(d) + " with k right-hand sides", field);
    }
    if (Heq.rows() != heq.size() || (Heq.rows() > 0 && Heq.cols() != d)) {
      throw ValidationError("equality rows must be k x " + std::to_string(d) + " with k right-hand sides", field);
    }
    if (!H.allFinite() || !h.allFinite() || !Heq.allFinite() || !heq.allFinite()) {
      throw ValidationError("non-finite entry", field);
    }
  }
};

/// Componentwise control bounds lower <= u <= upper.
struct ControlBox
{
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  static ControlBox symmetric(int m, double bound)
  {
    return {Eigen::VectorXd::Constant(m, -bound), Eigen::VectorXd::Constant(m, bound)};
  }

  /// Largest excess of u over the box (<= 0 inside).
  double max_violation(const Eigen::VectorXd & u) const
  {
    return std::max((u - upper).maxCoeff(), (lower - u).maxCoeff());
  }
};

/// Default half-width of the control box when a problem leaves the controls unbounded.
inline constexpr double kDefaultControlBound = 20.0;

/// One instance of the parameterized finite-horizon problem.
struct OcpProblem
{
  std::string name;
  LtiSystem system;
  BasisSet basis = BasisSet::fourier(1, 1.0);
  CostSpec cost;
  Polytope state_set;
  Polytope terminal_set;
  ControlBox control_box;
  Eigen::VectorXd x0;
  /// true when control_box was filled in with the inactive default
  bool control_box_is_default = false;

  double horizon() const noexcept { return basis.horizon(); }
  int state_dim() const noexcept { return system.state_dim(); }
  int input_dim() const noexcept { return system.input_dim(); }
  int num_coefficients() const noexcept { return system.input_dim() * basis.size(); }

  OcpProblem with_initial_state(const Eigen::VectorXd & x) const
  {
    OcpProblem p = *this;
    p.x0 = x;
    return p;
  }
};

}  // namespace sipocp

#pragma once

/**
 * @file
 * @brief Bundled benchmark problems.
 */

#include <Eigen/Dense>

#include <string>
#include <vector>

#include "error.hpp"
#include "problem_file.hpp"

namespace sipocp::benchmarks {

/**
 * @brief Bryson-Denham: double integrator from (0, 1) to (0, -1) on [0, 1] with x_1 <= 1/9,
 * cost integral of u^2 (optimal value 8).
 */
inline ProblemFile bryson_denham(int basis_size = 51)
{
  ProblemFile f;
  OcpProblem & p = f.problem;
  p.name = "bryson-denham";
  p.system.A = Eigen::MatrixXd(2, 2);
  p.system.A << 0.0, 1.0, 0.0, 0.0;
  p.system.B = Eigen::MatrixXd(2, 1);
  p.system.B << 0.0, 1.0;
  p.basis = BasisSet::fourier(basis_size, 1.0);
  p.cost.Q = Eigen::MatrixXd::Zero(2, 2);
  p.cost.R = Eigen::MatrixXd::Identity(1, 1);
  p.cost.Pf = Eigen::MatrixXd::Zero(2, 2);
  p.state_set = Polytope::whole(2);
  p.state_set.H = Eigen::MatrixXd(1, 2);
  p.state_set.H << 1.0, 0.0;
  p.state_set.h = Eigen::VectorXd::Constant(1, 1.0 / 9.0);
  p.terminal_set = Polytope::point(Eigen::Vector2d(0.0, -1.0));
  p.control_box = ControlBox::symmetric(1, kDefaultControlBound);
  p.control_box_is_default = true;
  p.x0 = Eigen::Vector2d(0.0, 1.0);
  f.sa.iterations = 250;
  f.sa.seed = 7;
  f.outputs.dir = "out/bryson-denham";
  return f;
}

/// Physical data of the cart-pendulum linearization.
struct PendulumData
{
  double pendulum_mass = 0.2;  // m0 [kg]
  double cart_mass = 3.0;      // M [kg]
  double half_length = 1.5;    // l [m], pendulum length is 2 l
  double gravity = 9.81;
  /// J0; defaults to the rod value m0 l^2 / 3
  double inertia = 0.2 * 1.5 * 1.5 / 3.0;
};

/// A and B of the cart-pendulum linearized about the upright position.
inline LtiSystem pendulum_system(const PendulumData & c = {})
{
  const double m0 = c.pendulum_mass, M = c.cart_mass, l = c.half_length, g = c.gravity;
  const double J = c.inertia + m0 * l * l;
  const double p = m0 + M - m0 * m0 * l * l / J;
  LtiSystem s;
  s.A = Eigen::MatrixXd::Zero(4, 4);
  s.A(0, 2) = 1.0;
  s.A(1, 3) = 1.0;
  s.A(2, 1) = -m0 * m0 * g * l * l / (J * p);
  s.A(3, 1) = m0 * g * l * (m0 + M) / (J * p);
  s.B = Eigen::MatrixXd::Zero(4, 1);
  s.B(2, 0) = 1.0 / p;
  s.B(3, 0) = -m0 * l / (J * p);
  return s;
}

/**
 * @brief Cart-pendulum stabilization on [0, 10] with |x| <= (0.5, 0.07, 0.5, 0.1),
 * |u| <= 10, terminal box |x_i(T)| <= 0.02 and cost integral of u^2.
 */
inline ProblemFile pendulum(int basis_size = 51)
{
  ProblemFile f;
  OcpProblem & p = f.problem;
  p.name = "pendulum";
  p.system = pendulum_system();
  p.basis = BasisSet::fourier(basis_size, 10.0);
  p.cost.Q = Eigen::MatrixXd::Zero(4, 4);
  p.cost.R = Eigen::MatrixXd::Identity(1, 1);
  p.cost.Pf = Eigen::MatrixXd::Zero(4, 4);
  p.state_set = Polytope::symmetric_box(Eigen::Vector4d(0.5, 0.07, 0.5, 0.1));
  p.terminal_set = Polytope::symmetric_box(Eigen::Vector4d::Constant(0.02));
  p.control_box = ControlBox::symmetric(1, 10.0);
  p.x0 = Eigen::Vector4d(0.0, 0.035, 0.0, 0.0);
  f.sa.iterations = 500;
  f.sa.seed = 7;
  MpcConfig mpc;
  mpc.interval = 0.5;
  mpc.steps = 10;
  mpc.sa = f.sa;
  mpc.sa.iterations = 125;
  f.mpc = mpc;
  f.outputs.dir = "out/pendulum";
  return f;
}

inline std::vector<std::string> names() { return {"bryson-denham", "pendulum"}; }

/// @throws ValidationError for an unknown name
inline ProblemFile by_name(const std::string & name)
{
  if (name == "bryson-denham") { return bryson_denham(); }
  if (name == "pendulum") { return pendulum(); }
  throw ValidationError("unknown benchmark '" + name + "' (expected bryson-denham or pendulum)", "benchmark");
}

}  // namespace sipocp::benchmarks

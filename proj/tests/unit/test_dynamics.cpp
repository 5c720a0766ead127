#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "sipocp/dynamics.hpp"

using namespace sipocp;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

double rel_err(const VectorXd & x, const VectorXd & y) { return (x - y).norm() / std::max(1.0, y.norm()); }

}  // namespace

// 50 random small systems against an adaptive Dormand-Prince integration.
TEST(Propagator, StateMatchesAdaptiveOdeOracle)
{
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> N01;
  std::uniform_real_distribution<double> U(0.5, 2.0);
  for (int trial = 0; trial < 50; ++trial) {
    const int d = 1 + trial % 4, m = 1 + trial % 2, n = 1 + 2 * (trial % 5);
    LtiSystem sys{MatrixXd(d, d), MatrixXd(d, m)};
    for (int i = 0; i < d; ++i) {
      for (int j = 0; j < d; ++j) { sys.A(i, j) = 0.7 * N01(rng); }
      for (int j = 0; j < m; ++j) { sys.B(i, j) = N01(rng); }
    }
    const double T = U(rng);
    const Propagator prop(sys, BasisSet::fourier(n, T));
    ControlCoefficients c{MatrixXd(m, n)};
    for (int i = 0; i < m; ++i) {
      for (int k = 0; k < n; ++k) { c.alpha(i, k) = N01(rng); }
    }
    VectorXd x0(d);
    for (int i = 0; i < d; ++i) { x0(i) = N01(rng); }
    auto u = [&](double t) -> VectorXd { return c.alpha * oracle::fourier_vector(n, std::min(t, T), T); };
    for (double frac : {0.0, 0.137, 0.5, 0.861, 1.0}) {
      const double t = frac * T;
      const VectorXd ref = oracle::ode_state(sys.A, sys.B, u, x0, t);
      EXPECT_LE(rel_err(prop.state_at(x0, c, t), ref), 1e-8) << "trial " << trial << " t = " << t;
    }
  }
}

TEST(Propagator, PendulumMatchesOdeOracle)
{
  const auto p = oracle::pendulum();
  const Propagator prop(p.system, p.basis);
  ControlCoefficients c = ControlCoefficients::zero(1, 51);
  c.alpha(0, 0) = -0.02;
  c.alpha(0, 3) = 0.05;
  c.alpha(0, 30) = -0.03;
  auto u = [&](double t) -> VectorXd { return c.alpha * oracle::fourier_vector(51, std::min(t, 10.0), 10.0); };
  for (double t : {0.5, 2.0, 5.0}) {
    const VectorXd ref = oracle::ode_state(p.system.A, p.system.B, u, p.x0, t, 1e-14);
    EXPECT_LE(rel_err(prop.state_at(p.x0, c, t), ref), 1e-8) << "t = " << t;
  }
}

TEST(Propagator, ZeroControlGivesFreeResponseAndStateIsAffineInAlpha)
{
  const auto p = oracle::bryson_denham(11);
  const Propagator prop(p.system, p.basis);
  const auto zero = ControlCoefficients::zero(1, 11);
  EXPECT_LE((prop.state_at(p.x0, zero, 0.4) - Eigen::Vector2d(0.4, 1.0)).norm(), 1e-14);
  EXPECT_LE((prop.state_at(p.x0, zero, 0.0) - p.x0).norm(), 0.0);

  ControlCoefficients a = zero, b = zero, ab = zero;
  a.alpha(0, 2) = 1.0;
  b.alpha(0, 7) = -2.0;
  ab.alpha = a.alpha + b.alpha;
  const double t = 0.73;
  const VectorXd lhs = prop.state_at(p.x0, ab, t) - prop.state_at(p.x0, zero, t);
  const VectorXd rhs = (prop.state_at(p.x0, a, t) - prop.state_at(p.x0, zero, t)) +
                       (prop.state_at(p.x0, b, t) - prop.state_at(p.x0, zero, t));
  EXPECT_LE((lhs - rhs).norm(), 1e-14);
}

TEST(Propagator, ConstantControlDoubleIntegratorClosedForm)
{
  const auto p = oracle::bryson_denham(1);
  const Propagator prop(p.system, p.basis);
  ControlCoefficients c{MatrixXd::Constant(1, 1, -2.0)};
  for (double t : {0.1, 0.5, 0.77, 1.0}) {
    const Eigen::Vector2d expected(t - t * t, 1.0 - 2.0 * t);
    EXPECT_LE((prop.state_at(p.x0, c, t) - expected).norm(), 1e-14);
  }
}

TEST(Propagator, ShapeChecks)
{
  const auto p = oracle::bryson_denham(3);
  const Propagator prop(p.system, p.basis);
  EXPECT_THROW((void)prop.state_at(VectorXd::Zero(3), ControlCoefficients::zero(1, 3), 0.5), DomainError);
  EXPECT_THROW((void)prop.state_at(p.x0, ControlCoefficients::zero(1, 5), 0.5), DomainError);
  EXPECT_THROW((void)prop.state_at(p.x0, ControlCoefficients::zero(1, 3), 1.5), DomainError);
  EXPECT_THROW(Propagator(LtiSystem{MatrixXd::Zero(2, 3), MatrixXd::Zero(2, 1)}, p.basis), ValidationError);
}

TEST(ControlCoefficients, VecIsChannelMajor)
{
  ControlCoefficients c{MatrixXd(2, 3)};
  c.alpha << 1, 2, 3, 4, 5, 6;
  const VectorXd v = c.vec();
  EXPECT_EQ(v, (VectorXd(6) << 1, 2, 3, 4, 5, 6).finished());
  EXPECT_EQ(ControlCoefficients::from_vec(v, 2, 3).alpha, c.alpha);
}

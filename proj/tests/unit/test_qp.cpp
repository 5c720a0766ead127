#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "sipocp/qp.hpp"

using namespace sipocp;
using Eigen::MatrixXd;
using Eigen::VectorXd;

TEST(DualActiveSet, MatchesBruteForceActiveSetEnumeration)
{
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + trial % 4, p = 2 + trial % 6, q = trial % 3 == 0 ? std::min(1, n - 1) : 0;
    const QpModel m = oracle::random_qp(rng, n, p, q);
    const auto ref = oracle::brute_force_qp(m);
    ASSERT_TRUE(ref.has_value()) << "trial " << trial;
    const QpSolution s = solve_qp(m);
    ASSERT_TRUE(s.optimal()) << "trial " << trial;
    EXPECT_LE((s.x - *ref).norm(), 1e-8 * std::max(1.0, ref->norm())) << "trial " << trial;
    EXPECT_NEAR(s.objective, m.objective(*ref), 1e-8 * std::max(1.0, std::abs(s.objective)));
  }
}

TEST(DualActiveSet, KktResidualsAreSmall)
{
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 5 + trial % 30;
    const QpModel m = oracle::random_qp(rng, n, 3 * n, trial % 2 ? 2 : 0);
    const QpSolution s = solve_qp(m);
    ASSERT_TRUE(s.optimal());
    EXPECT_LE(s.kkt.primal, 1e-8);
    EXPECT_LE(s.kkt.dual, 1e-8);
    EXPECT_LE(s.kkt.complementarity, 1e-8);
    EXPECT_GE(s.lambda_in.minCoeff(), 0.0);
  }
}

TEST(DualActiveSet, WarmStartDoesNotChangeTheSolution)
{
  std::mt19937_64 rng(8);
  std::normal_distribution<double> N01;
  for (int trial = 0; trial < 60; ++trial) {
    const int n = 4 + trial % 20;
    const QpModel m = oracle::random_qp(rng, n, 4 * n, trial % 3 == 0 ? 1 : 0);
    const QpSolution cold = solve_qp(m);
    VectorXd guess(n);
    for (int i = 0; i < n; ++i) { guess(i) = 2.0 * N01(rng); }
    const QpSolution warm = solve_qp(m, guess);
    const QpSolution hot = solve_qp(m, cold.x);
    ASSERT_TRUE(cold.optimal() && warm.optimal() && hot.optimal());
    EXPECT_LE((warm.x - cold.x).norm(), 1e-7 * std::max(1.0, cold.x.norm()));
    EXPECT_LE((hot.x - cold.x).norm(), 1e-7 * std::max(1.0, cold.x.norm()));
  }
}

TEST(DualActiveSet, UnconstrainedAndEqualityOnly)
{
  QpModel m;
  m.hessian = (MatrixXd(2, 2) << 2.0, 0.5, 0.5, 1.0).finished();
  m.linear = Eigen::Vector2d(-1.0, 2.0);
  m.A_in = MatrixXd(0, 2);
  m.b_in = VectorXd(0);
  m.A_eq = MatrixXd(0, 2);
  m.b_eq = VectorXd(0);
  QpSolution s = solve_qp(m);
  ASSERT_TRUE(s.optimal());
  const VectorXd x = (2.0 * m.hessian).ldlt().solve(-m.linear);
  EXPECT_LE((s.x - x).norm(), 1e-14);

  m.A_eq = (MatrixXd(1, 2) << 1.0, 1.0).finished();
  m.b_eq = VectorXd::Constant(1, 1.0);
  s = solve_qp(m);
  ASSERT_TRUE(s.optimal());
  EXPECT_NEAR(s.x.sum(), 1.0, 1e-14);
  EXPECT_LE(s.kkt.dual, 1e-12);
}

TEST(DualActiveSet, DetectsInfeasibility)
{
  QpModel m;
  m.hessian = MatrixXd::Identity(2, 2);
  m.linear = VectorXd::Zero(2);
  m.A_in = (MatrixXd(2, 2) << 1.0, 0.0, -1.0, 0.0).finished();
  m.b_in = Eigen::Vector2d(-1.0, -1.0);  // x1 <= -1 and x1 >= 1
  m.A_eq = MatrixXd(0, 2);
  m.b_eq = VectorXd(0);
  EXPECT_EQ(solve_qp(m).status, QpStatus::Infeasible);

  // inconsistent equalities
  m.A_in = MatrixXd(0, 2);
  m.b_in = VectorXd(0);
  m.A_eq = (MatrixXd(2, 2) << 1.0, 1.0, 2.0, 2.0).finished();
  m.b_eq = Eigen::Vector2d(1.0, 3.0);
  EXPECT_EQ(solve_qp(m).status, QpStatus::Infeasible);

  // violated zero row
  m.A_eq = MatrixXd(0, 2);
  m.b_eq = VectorXd(0);
  m.A_in = MatrixXd::Zero(1, 2);
  m.b_in = VectorXd::Constant(1, -0.5);
  EXPECT_EQ(solve_qp(m).status, QpStatus::Infeasible);
}

TEST(DualActiveSet, RedundantRowsAreHandled)
{
  QpModel m;
  m.hessian = MatrixXd::Identity(3, 3);
  m.linear = Eigen::Vector3d(-4.0, -4.0, 0.0);
  m.A_in = (MatrixXd(4, 3) << 1, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0, 0).finished();
  m.b_in = Eigen::Vector4d(1.0, 1.0, 0.5, 2.0);
  m.A_eq = (MatrixXd(2, 3) << 0, 0, 1, 0, 0, 2).finished();
  m.b_eq = Eigen::Vector2d(0.25, 0.5);
  const QpSolution s = solve_qp(m);
  ASSERT_TRUE(s.optimal());
  EXPECT_LE((s.x - Eigen::Vector3d(1.0, 0.5, 0.25)).norm(), 1e-13);
  EXPECT_LE(s.kkt.dual, 1e-12);
}

TEST(HessianFactor, CachedFactorGivesSameSolution)
{
  std::mt19937_64 rng(3);
  QpModel m = oracle::random_qp(rng, 6, 12, 1);
  const QpSolution a = solve_qp(m);
  m.factor = HessianFactor::compute(m.hessian);
  const QpSolution b = solve_qp(m);
  EXPECT_LE((a.x - b.x).norm(), 1e-12);
  EXPECT_THROW((void)HessianFactor::compute(-MatrixXd::Identity(2, 2)), NumericalError);
}

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "sipocp/lqr.hpp"

using namespace sipocp;
using Eigen::MatrixXd;

namespace {

double care_residual(const MatrixXd & A, const MatrixXd & B, const MatrixXd & Q, const MatrixXd & R, const MatrixXd & P)
{
  const MatrixXd res = A.transpose() * P + P * A - P * B * R.inverse() * B.transpose() * P + Q;
  return res.cwiseAbs().maxCoeff();
}

}  // namespace

TEST(Lqr, ScalarClosedForm)
{
  for (double a : {-2.0, 0.0, 0.7, 3.0}) {
    for (double q : {0.5, 1.0, 4.0}) {
      const double r = 2.0;
      const LqrGain g = lqr(MatrixXd::Constant(1, 1, a), MatrixXd::Constant(1, 1, 1.0), MatrixXd::Constant(1, 1, q),
                            MatrixXd::Constant(1, 1, r));
      const double p = r * (a + std::sqrt(a * a + q / r));
      EXPECT_NEAR(g.P(0, 0), p, 1e-10 * p);
      EXPECT_NEAR(g.K(0, 0), -p / r, 1e-10 * p);
      EXPECT_EQ(g.q_regularization, 0.0);
    }
  }
}

TEST(Lqr, DoubleIntegrator)
{
  const MatrixXd A = (MatrixXd(2, 2) << 0, 1, 0, 0).finished();
  const MatrixXd B = (MatrixXd(2, 1) << 0, 1).finished();
  const LqrGain g = lqr(A, B, MatrixXd::Identity(2, 2), MatrixXd::Identity(1, 1));
  const double s3 = std::sqrt(3.0);
  EXPECT_LE((g.P - (MatrixXd(2, 2) << s3, 1, 1, s3).finished()).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LE((g.K - (MatrixXd(1, 2) << -1, -s3).finished()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Lqr, RandomSystemsAreStabilized)
{
  std::mt19937_64 rng(12);
  std::normal_distribution<double> N01;
  for (int trial = 0; trial < 30; ++trial) {
    const int d = 2 + trial % 5, m = 1 + trial % 2;
    MatrixXd A(d, d), B(d, m);
    for (int i = 0; i < d; ++i) {
      for (int j = 0; j < d; ++j) { A(i, j) = N01(rng); }
      for (int j = 0; j < m; ++j) { B(i, j) = N01(rng); }
    }
    const MatrixXd Q = MatrixXd::Identity(d, d);
    const MatrixXd R = 0.5 * MatrixXd::Identity(m, m);
    const LqrGain g = lqr(A, B, Q, R);
    EXPECT_LE(care_residual(A, B, Q, R, g.P), 1e-8 * std::max(1.0, g.P.norm())) << "trial " << trial;
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(g.P);
    EXPECT_GT(es.eigenvalues().minCoeff(), 0.0);
    const Eigen::VectorXcd ev = (A + B * g.K).eigenvalues();
    EXPECT_LT(ev.real().maxCoeff(), 0.0) << "trial " << trial;
  }
}

TEST(Lqr, SingularWeightIsRegularized)
{
  const OcpProblem p = oracle::pendulum(5);
  const LqrGain g = lqr(p);
  EXPECT_EQ(g.q_regularization, 1e-6);
  EXPECT_LT((p.system.A + p.system.B * g.K).eigenvalues().real().maxCoeff(), 0.0);
}

TEST(ClfCheck, HoldsWithTheRiccatiTerminalWeight)
{
  OcpProblem p = oracle::pendulum(5);
  p.cost.Q = MatrixXd::Identity(4, 4);
  const LqrGain g = lqr(p);
  p.cost.Pf = 1.05 * g.P;
  const ClfCheck c = check_clf(p, g.K, 200, 1);
  EXPECT_EQ(c.samples, 200);
  EXPECT_TRUE(c.holds());
  EXPECT_LT(c.worst_residual, 0.0);
  for (int i = 0; i < 4; ++i) { EXPECT_LE(p.terminal_set.max_violation(Eigen::Vector4d::Unit(i) * 0.02), 0.0); }
}

TEST(ClfCheck, ZeroTerminalWeightFailsForTheUnstablePendulum)
{
  const OcpProblem p = oracle::pendulum(5);
  const ClfCheck c = check_clf(p, lqr(p).K);
  EXPECT_EQ(c.samples, 200);
  EXPECT_FALSE(c.holds());
  EXPECT_GT(c.worst_residual, 0.0);
}

TEST(ClfCheck, EqualityTerminalSetUsesItsPoint)
{
  OcpProblem p = oracle::bryson_denham(5);
  const ClfCheck c = check_clf(p, lqr(p).K);
  EXPECT_EQ(c.samples, 1);
}

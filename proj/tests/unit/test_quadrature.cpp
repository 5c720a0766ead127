#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "sipocp/quadrature.hpp"

using namespace sipocp;

TEST(GaussLegendre, TwoPointRuleMatchesClosedForm)
{
  const auto r = gauss_legendre(2);
  ASSERT_EQ(r.nodes.size(), 2u);
  EXPECT_NEAR(std::abs(r.nodes[0]), 1.0 / std::sqrt(3.0), 1e-15);
  EXPECT_NEAR(r.nodes[0], -r.nodes[1], 1e-15);
  EXPECT_NEAR(r.weights[0], 1.0, 1e-15);
  EXPECT_NEAR(r.weights[1], 1.0, 1e-15);
}

TEST(GaussLegendre, ExactForPolynomialsUpToDegreeTwoNMinusOne)
{
  for (int n : {1, 3, 7, 20}) {
    const auto r = gauss_legendre(n);
    for (int deg = 0; deg <= 2 * n - 1; ++deg) {
      double sum = 0.0;
      for (std::size_t i = 0; i < r.nodes.size(); ++i) { sum += r.weights[i] * std::pow(r.nodes[i], deg); }
      const double exact = deg % 2 ? 0.0 : 2.0 / (deg + 1);
      EXPECT_NEAR(sum, exact, 1e-13) << "n = " << n << ", degree " << deg;
    }
  }
}

TEST(GaussLegendre, RejectsNonPositiveOrder) { EXPECT_THROW(gauss_legendre(0), std::exception); }

TEST(CompositeGaussLegendre, IntegratesOscillatoryFunction)
{
  const auto q = composite_gauss_legendre(0.0, 3.0, 16, gauss_legendre(20));
  double sum = 0.0;
  for (std::size_t i = 0; i < q.t.size(); ++i) { sum += q.w[i] * std::sin(7.0 * q.t[i]); }
  EXPECT_NEAR(sum, (1.0 - std::cos(21.0)) / 7.0, 1e-14);
  double len = 0.0;
  for (double w : q.w) { len += w; }
  EXPECT_NEAR(len, 3.0, 1e-14);
}

#pragma once

/**
 * @file
 * @brief Gauss-Legendre nodes/weights and composite rules on [a, b].
 */

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <utility>
#include <vector>

#include "error.hpp"

namespace sipocp {

/// Gauss-Legendre rule on the reference interval [-1, 1].
struct GaussLegendreRule
{
  std::vector<double> nodes;
  std::vector<double> weights;
};

/**
 * @brief Compute the n-point Gauss-Legendre rule by Newton iteration on P_n.
 *
 * Nodes are returned in increasing order. Exact for polynomials of degree 2n - 1.
 */
inline GaussLegendreRule gauss_legendre(int n)
{
  if (n < 1) { throw DomainError("gauss_legendre: need at least one node"); }
  GaussLegendreRule rule;
  rule.nodes.assign(static_cast<std::size_t>(n), 0.0);
  rule.weights.assign(static_cast<std::size_t>(n), 0.0);
  if (n == 1) {
    rule.weights[0] = 2.0;
    return rule;
  }

  // P_n(x) and P_n'(x) by the three-term recurrence
  const auto legendre = [n](double x) {
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = pk;
    }
    return std::pair{p1, n * (x * p1 - p0) / (x * x - 1.0)};
  };

  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    bool converged = false;
    for (int it = 0; it < 100 && !converged; ++it) {
      const auto [p, dp] = legendre(x);
      const double dx = p / dp;
      x -= dx;
      converged = std::abs(dx) < 1e-15;
    }
    if (!converged) { throw NumericalError("gauss_legendre: Newton iteration did not converge"); }
    const double dp = legendre(x).second;
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    const auto lo = static_cast<std::size_t>(i);
    const auto hi = static_cast<std::size_t>(n - 1 - i);
    rule.nodes[lo] = -x;
    rule.nodes[hi] = x;
    rule.weights[lo] = w;
    rule.weights[hi] = w;
  }
  if (n % 2 == 1) { rule.nodes[static_cast<std::size_t>(n / 2)] = 0.0; }
  return rule;
}

/// Node/weight pairs of a composite rule on a concrete interval.
struct QuadraturePoints
{
  std::vector<double> t;
  std::vector<double> w;
};

/// Composite Gauss-Legendre rule with `panels` equal panels on [a, b].
inline QuadraturePoints composite_gauss_legendre(double a, double b, int panels, const GaussLegendreRule & rule)
{
  if (panels < 1) { throw DomainError("composite_gauss_legendre: panels must be positive"); }
  QuadraturePoints q;
  const double h = (b - a) / panels;
  q.t.reserve(static_cast<std::size_t>(panels) * rule.nodes.size());
  q.w.reserve(q.t.capacity());
  for (int p = 0; p < panels; ++p) {
    const double lo = a + p * h;
    for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
      q.t.push_back(lo + 0.5 * h * (rule.nodes[k] + 1.0));
      q.w.push_back(0.5 * h * rule.weights[k]);
    }
  }
  return q;
}

/// Panel layout shared by every integral tied to one (system, basis) pair.
struct QuadratureOptions
{
  /// Gauss-Legendre nodes per panel.
  int nodes_per_panel = 20;
  /// Number of panels on [0, T]; 0 selects the automatic count from the basis.
  int panels = 0;
};

}  // namespace sipocp

#pragma once

/**
 * @file
 * @brief Control basis dictionaries: evaluation of Psi(t) and the L2 Gram matrix.
 */

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <numbers>
#include <string>
#include <vector>

#include "error.hpp"
#include "quadrature.hpp"

namespace sipocp {

enum class BasisKind { FourierSinCos, PiecewisePolynomial, Custom };

/// Argument of the Fourier harmonics: `Normalized` uses t/T, `Literal` uses t.
enum class FrequencyScaling { Normalized, Literal };

/// One user-supplied basis function with an identifier kept for reports.
struct CustomFunction
{
  std::string id;
  std::function<double(double)> fn;
};

/**
 * @brief Resolve a custom basis function identifier.
 *
 * Recognized ids (s = t / horizon): `const`, `poly:k` (s^k), `sin:k` (sin 2 pi k s),
 * `cos:k` (cos 2 pi k s), `exp:r` (e^{r s}).
 */
inline CustomFunction custom_function_from_id(const std::string & id, double horizon)
{
  const auto colon = id.find(':');
  const std::string head = id.substr(0, colon);
  double arg = 0.0;
  if (colon != std::string::npos) {
    try {
      std::size_t used = 0;
      arg = std::stod(id.substr(colon + 1), &used);
      if (used != id.size() - colon - 1) { throw std::invalid_argument(id); }
    } catch (const std::exception &) {
      throw ValidationError("malformed custom basis id '" + id + "'", "basis.functions");
    }
  }
  const double T = horizon;
  constexpr double two_pi = 2.0 * std::numbers::pi;
  if (head == "const" && colon == std::string::npos) { return {id, [](double) { return 1.0; }}; }
  if (head == "poly" && colon != std::string::npos) { return {id, [=](double t) { return std::pow(t / T, arg); }}; }
  if (head == "sin" && colon != std::string::npos) {
    return {id, [=](double t) { return std::sin(two_pi * arg * t / T); }};
  }
  if (head == "cos" && colon != std::string::npos) {
    return {id, [=](double t) { return std::cos(two_pi * arg * t / T); }};
  }
  if (head == "exp" && colon != std::string::npos) { return {id, [=](double t) { return std::exp(arg * t / T); }}; }
  throw ValidationError("unknown custom basis id '" + id + "'", "basis.functions");
}

/**
 * @brief A fixed tuple of N linearly independent scalar functions on [0, T].
 *
 * Immutable after construction. Construction computes the Gram matrix and rejects
 * dictionaries whose Gram matrix is not numerically positive definite.
 *
 * Fourier layout for odd N with K = (N - 1) / 2:
 *   psi_1 = 1,  psi_{1+k} = sin(2 pi k s),  psi_{1+K+k} = cos(2 pi k s),  k = 1..K.
 */
class BasisSet
{
public:
  static BasisSet fourier(int n, double horizon, FrequencyScaling scaling = FrequencyScaling::Normalized)
  {
    if (n < 1 || n % 2 == 0) {
      throw ValidationError("Fourier basis needs an odd number of functions, got " + std::to_string(n), "basis.N");
    }
    BasisSet b(BasisKind::FourierSinCos, n, horizon);
    b.scaling_ = scaling;
    b.finish();
    return b;
  }

  /// Continuous piecewise-linear hat functions on a uniform partition with N nodes (N >= 2).
  static BasisSet piecewise_linear(int n, double horizon)
  {
    if (n < 2) { throw ValidationError("piecewise-linear basis needs at least 2 nodes", "basis.N"); }
    BasisSet b(BasisKind::PiecewisePolynomial, n, horizon);
    b.finish();
    return b;
  }

  static BasisSet custom(std::vector<CustomFunction> functions, double horizon)
  {
    if (functions.empty()) { throw ValidationError("custom basis is empty", "basis.functions"); }
    BasisSet b(BasisKind::Custom, static_cast<int>(functions.size()), horizon);
    b.custom_ = std::make_shared<const std::vector<CustomFunction>>(std::move(functions));
    b.finish();
    return b;
  }

  BasisKind kind() const noexcept { return kind_; }
  int size() const noexcept { return n_; }
  double horizon() const noexcept { return horizon_; }
  FrequencyScaling frequency_scaling() const noexcept { return scaling_; }
  const Eigen::MatrixXd & gram() const noexcept { return gram_; }

  /// Identifiers of custom functions (empty for the built-in kinds).
  std::vector<std::string> custom_ids() const
  {
    std::vector<std::string> ids;
    if (custom_) {
      for (const auto & f : *custom_) { ids.push_back(f.id); }
    }
    return ids;
  }

  /// Panel count that resolves the basis with a 20-point Gauss-Legendre rule.
  int suggested_panels() const
  {
    int panels = std::max(16, 2 * n_);
    if (kind_ == BasisKind::FourierSinCos) {
      const double cycles = ((n_ - 1) / 2) * (scaling_ == FrequencyScaling::Literal ? horizon_ : 1.0);
      panels = std::max(panels, static_cast<int>(std::ceil(4.0 * cycles)));
    } else if (kind_ == BasisKind::PiecewisePolynomial) {
      // panels aligned with the hat breakpoints
      const int segments = n_ - 1;
      panels = segments * ((panels + segments - 1) / segments);
    }
    return panels;
  }

  /// Psi(t); throws DomainError outside [0, T].
  Eigen::VectorXd eval(double t) const
  {
    Eigen::VectorXd out(n_);
    eval_into(t, out);
    return out;
  }

  void eval_into(double t, Eigen::Ref<Eigen::VectorXd> out) const
  {
    t = check_time(t);
    switch (kind_) {
      case BasisKind::FourierSinCos: {
        const int K = (n_ - 1) / 2;
        const double s = scaling_ == FrequencyScaling::Normalized ? t / horizon_ : t;
        out(0) = 1.0;
        for (int k = 1; k <= K; ++k) {
          const double arg = 2.0 * std::numbers::pi * k * s;
          out(k) = std::sin(arg);
          out(K + k) = std::cos(arg);
        }
        break;
      }
      case BasisKind::PiecewisePolynomial: {
        out.setZero();
        const double h = horizon_ / (n_ - 1);
        const int seg = std::min(static_cast<int>(t / h), n_ - 2);
        const double r = (t - seg * h) / h;
        out(seg) = 1.0 - r;
        out(seg + 1) = r;
        break;
      }
      case BasisKind::Custom:
        for (int i = 0; i < n_; ++i) { out(i) = (*custom_)[static_cast<std::size_t>(i)].fn(t); }
        break;
    }
  }

  /// Clamp t into [0, T] allowing round-off slack; throw if it is genuinely outside.
  double check_time(double t) const
  {
    const double slack = 1e-12 * std::max(1.0, horizon_);
    if (!(t >= -slack && t <= horizon_ + slack)) {
      throw DomainError("basis evaluated at t = " + std::to_string(t) + " outside [0, " + std::to_string(horizon_) + "]");
    }
    return std::clamp(t, 0.0, horizon_);
  }

private:
  BasisSet(BasisKind kind, int n, double horizon) : kind_(kind), n_(n), horizon_(horizon)
  {
    if (!(horizon > 0.0) || !std::isfinite(horizon)) { throw ValidationError("horizon must be positive", "horizon"); }
  }

  void finish()
  {
    const auto rule = gauss_legendre(20);
    const auto q = composite_gauss_legendre(0.0, horizon_, suggested_panels(), rule);
    gram_.setZero(n_, n_);
    Eigen::VectorXd psi(n_);
    for (std::size_t k = 0; k < q.t.size(); ++k) {
      eval_into(q.t[k], psi);
      if (!psi.allFinite()) { throw NumericalError("basis function returned a non-finite value"); }
      gram_.selfadjointView<Eigen::Lower>().rankUpdate(psi, q.w[k]);
    }
    gram_ = gram_.selfadjointView<Eigen::Lower>();

    // linear independence: Cholesky pivots relative to the largest diagonal entry
    Eigen::LLT<Eigen::MatrixXd> llt(gram_);
    const double scale = gram_.diagonal().maxCoeff();
    const double min_pivot =
        llt.info() == Eigen::Success ? llt.matrixLLT().diagonal().array().square().minCoeff() : 0.0;
    if (!(scale > 0.0) || min_pivot <= 1e-10 * scale) {
      throw ValidationError("basis functions are not linearly independent on [0, T] (Gram matrix not SPD)", "basis");
    }
  }

  BasisKind kind_;
  int n_;
  double horizon_;
  FrequencyScaling scaling_ = FrequencyScaling::Normalized;
  std::shared_ptr<const std::vector<CustomFunction>> custom_;
  Eigen::MatrixXd gram_;
};

inline Eigen::VectorXd eval_basis(const BasisSet & b, double t) { return b.eval(t); }

/// P[i][j] = integral over [0, T] of psi_i psi_j.
inline const Eigen::MatrixXd & gram_matrix(const BasisSet & b) { return b.gram(); }

}  // namespace sipocp

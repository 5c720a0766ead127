#pragma once

/**
 * @file
 * @brief Strictly convex dense QP solver (Goldfarb-Idnani dual active set).
 *
 * Problem form:
 *   minimize    a^T H a + f^T a + c
 *   subject to  A_in a <= b_in,   A_eq a = b_eq,
 * with H symmetric positive definite. The dual method starts from the unconstrained
 * minimizer and adds violated rows one at a time, so redundant and duplicated rows are
 * never added and infeasibility is detected exactly when a violated row cannot be
 * satisfied by any primal or dual step.
 */

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dynamics.hpp"
#include "error.hpp"

namespace sipocp {

/// Origin of one constraint row in a transcribed model.
struct RowTag
{
  enum class Kind { State, Control, Terminal, Other };
  Kind kind = Kind::Other;
  /// index into the time sample vector (-1 for terminal/other rows)
  int sample = -1;
  /// row index within the originating constraint set
  int row = -1;
};

inline const char * to_string(RowTag::Kind k)
{
  switch (k) {
    case RowTag::Kind::State: return "state";
    case RowTag::Kind::Control: return "control";
    case RowTag::Kind::Terminal: return "terminal";
    case RowTag::Kind::Other: return "other";
  }
  return "other";
}

/// Cached factorization of 2H: J0 = L^{-T} with 2H = L L^T.
struct HessianFactor
{
  Eigen::MatrixXd J0;

  static std::shared_ptr<const HessianFactor> compute(const Eigen::MatrixXd & hessian)
  {
    const Eigen::MatrixXd P = 2.0 * hessian;
    Eigen::LLT<Eigen::MatrixXd> llt(P);
    if (llt.info() != Eigen::Success) { throw NumericalError("QP Hessian is not positive definite"); }
    auto f = std::make_shared<HessianFactor>();
    const Eigen::Index n = P.rows();
    f->J0 = llt.matrixU().solve(Eigen::MatrixXd::Identity(n, n));
    return f;
  }
};

/// Finite-dimensional strictly convex QP whose optimal value is G(xi; x0).
struct QpModel
{
  Eigen::MatrixXd hessian;
  Eigen::VectorXd linear;
  double constant = 0.0;

  Eigen::MatrixXd A_in;
  Eigen::VectorXd b_in;
  std::vector<RowTag> in_tags;
  /// positive factor each inequality row was divided by (empty: rows are unscaled)
  Eigen::VectorXd in_scale;

  Eigen::MatrixXd A_eq;
  Eigen::VectorXd b_eq;
  std::vector<RowTag> eq_tags;

  /// Optional cached factorization of the (xi-independent) Hessian.
  std::shared_ptr<const HessianFactor> factor;

  Eigen::Index num_vars() const noexcept { return hessian.rows(); }

  double objective(const Eigen::VectorXd & a) const { return a.dot(hessian * a) + linear.dot(a) + constant; }
};

enum class QpStatus { Optimal, Infeasible, MaxIter, Unbounded };

inline const char * to_string(QpStatus s)
{
  switch (s) {
    case QpStatus::Optimal: return "optimal";
    case QpStatus::Infeasible: return "infeasible";
    case QpStatus::MaxIter: return "max_iter";
    case QpStatus::Unbounded: return "unbounded";
  }
  return "unknown";
}

struct KktResiduals
{
  double primal = 0.0;
  double dual = 0.0;
  double complementarity = 0.0;
};

struct QpSolution
{
  Eigen::VectorXd x;
  double objective = std::numeric_limits<double>::infinity();
  QpStatus status = QpStatus::MaxIter;
  KktResiduals kkt;
  /// multipliers of A_in rows (>= 0) and A_eq rows
  Eigen::VectorXd lambda_in;
  Eigen::VectorXd lambda_eq;
  std::vector<int> active_rows;
  int iterations = 0;

  bool optimal() const noexcept { return status == QpStatus::Optimal; }
};

struct QpOptions
{
  /// rows with A_in a - b_in above this are treated as violated
  double feasibility_tol = 1e-10;
  /// 0 selects 10 (n + rows) + 100
  int max_iterations = 0;
};

/// KKT residuals of (x, multipliers) for a model; the dual residual is scaled by the gradient size.
inline KktResiduals kkt_residuals(const QpModel & model, const Eigen::VectorXd & x, const Eigen::VectorXd & lambda_in,
                                  const Eigen::VectorXd & lambda_eq)
{
  KktResiduals r;
  Eigen::VectorXd grad = 2.0 * model.hessian * x + model.linear;
  const double scale = std::max({1.0, grad.lpNorm<Eigen::Infinity>(), model.linear.lpNorm<Eigen::Infinity>()});
  if (model.A_in.rows() > 0) {
    const Eigen::VectorXd slack = model.A_in * x - model.b_in;
    r.primal = std::max(r.primal, slack.cwiseMax(0.0).maxCoeff());
    r.complementarity = lambda_in.cwiseProduct(slack).cwiseAbs().maxCoeff() / std::max(1.0, lambda_in.maxCoeff());
    grad += model.A_in.transpose() * lambda_in;
  }
  if (model.A_eq.rows() > 0) {
    r.primal = std::max(r.primal, (model.A_eq * x - model.b_eq).cwiseAbs().maxCoeff());
    grad += model.A_eq.transpose() * lambda_eq;
  }
  r.dual = grad.lpNorm<Eigen::Infinity>() / scale;
  return r;
}

namespace detail {

/**
 * Goldfarb-Idnani in the ">=" convention: rows n_i^T x >= c_i (inequalities) and
 * n_i^T x = c_i (equalities), objective 1/2 x^T P x + q^T x.
 */
class DualActiveSet
{
public:
  DualActiveSet(const QpModel & model, const HessianFactor & factor, const QpOptions & opts,
                const std::vector<char> * preferred)
      : model_(model), opts_(opts), preferred_(preferred)
  {
    n_ = model.num_vars();
    J_ = factor.J0;
    R_ = Eigen::MatrixXd::Zero(n_, n_);
    d_.resize(n_);
    z_.resize(n_);
  }

  QpSolution run()
  {
    QpSolution sol;
    const Eigen::Index n_in = model_.A_in.rows();
    const Eigen::Index n_eq = model_.A_eq.rows();
    const int max_iter =
        opts_.max_iterations > 0 ? opts_.max_iterations : static_cast<int>(10 * (n_ + n_in + n_eq) + 100);

    // unconstrained minimizer of 1/2 x^T P x + q^T x
    x_ = -J_ * (J_.transpose() * model_.linear);
    sol.lambda_in = Eigen::VectorXd::Zero(n_in);
    sol.lambda_eq = Eigen::VectorXd::Zero(n_eq);

    // equality rows: full steps, never dropped
    for (Eigen::Index e = 0; e < n_eq; ++e) {
      const Eigen::VectorXd np = model_.A_eq.row(e).transpose();
      compute_d(np);
      update_z();
      update_r();
      const double residual = model_.b_eq(e) - np.dot(x_);
      if (dependent()) {
        if (std::abs(residual) > 1e-9 * std::max(1.0, std::abs(model_.b_eq(e)))) {
          sol.status = QpStatus::Infeasible;
          return finish(sol);
        }
        continue;  // redundant equality
      }
      const double t = residual / z_.dot(np);
      x_ += t * z_;
      for (std::size_t k = 0; k < active_.size(); ++k) { u_[k] -= t * r_(static_cast<Eigen::Index>(k)); }
      add_constraint(~static_cast<int>(e), t);
    }

    std::vector<char> is_active(static_cast<std::size_t>(n_in), 0);
    int iter = 0;
    while (true) {
      if (++iter > max_iter) {
        sol.status = QpStatus::MaxIter;
        sol.iterations = iter;
        return finish(sol);
      }
      // step 1: pick a violated row
      int p = -1;
      if (n_in > 0) {
        const Eigen::VectorXd viol = model_.A_in * x_ - model_.b_in;
        double worst = opts_.feasibility_tol, worst_pref = opts_.feasibility_tol;
        int p_pref = -1;
        for (Eigen::Index i = 0; i < n_in; ++i) {
          if (is_active[static_cast<std::size_t>(i)]) { continue; }
          if (viol(i) > worst) {
            worst = viol(i);
            p = static_cast<int>(i);
          }
          if (preferred_ && (*preferred_)[static_cast<std::size_t>(i)] && viol(i) > worst_pref) {
            worst_pref = viol(i);
            p_pref = static_cast<int>(i);
          }
        }
        if (p_pref >= 0) { p = p_pref; }
      }
      if (p < 0) {
        sol.status = QpStatus::Optimal;
        sol.iterations = iter;
        return finish(sol);
      }

      // ">=" form of the chosen row
      const Eigen::VectorXd np = -model_.A_in.row(p).transpose();
      const double cp = -model_.b_in(p);
      double u_plus = 0.0;

      while (true) {
        // step 2a: primal and dual directions
        compute_d(np);
        update_z();
        update_r();

        // step 2b: partial (dual) step length
        double t1 = std::numeric_limits<double>::infinity();
        int drop = -1;
        for (std::size_t k = 0; k < active_.size(); ++k) {
          if (active_[k] < 0) { continue; }  // equalities
          const double rk = r_(static_cast<Eigen::Index>(k));
          if (rk > 0.0 && u_[k] / rk < t1) {
            t1 = u_[k] / rk;
            drop = static_cast<int>(k);
          }
        }
        // full (primal) step length
        const double slack = np.dot(x_) - cp;
        double t2 = std::numeric_limits<double>::infinity();
        if (!dependent()) { t2 = -slack / z_.dot(np); }
        const double t = std::min(t1, t2);

        if (!std::isfinite(t)) {
          sol.status = QpStatus::Infeasible;
          sol.iterations = iter;
          return finish(sol);
        }
        if (!std::isfinite(t2)) {
          // dual step only
          for (std::size_t k = 0; k < active_.size(); ++k) { u_[k] -= t * r_(static_cast<Eigen::Index>(k)); }
          u_plus += t;
          is_active[static_cast<std::size_t>(active_[static_cast<std::size_t>(drop)])] = 0;
          delete_constraint(static_cast<std::size_t>(drop));
          if (++iter > max_iter) {
            sol.status = QpStatus::MaxIter;
            sol.iterations = iter;
            return finish(sol);
          }
          continue;
        }

        x_ += t * z_;
        for (std::size_t k = 0; k < active_.size(); ++k) { u_[k] -= t * r_(static_cast<Eigen::Index>(k)); }
        u_plus += t;

        if (t == t2) {
          add_constraint(p, u_plus);
          is_active[static_cast<std::size_t>(p)] = 1;
          break;
        }
        is_active[static_cast<std::size_t>(active_[static_cast<std::size_t>(drop)])] = 0;
        delete_constraint(static_cast<std::size_t>(drop));
        if (++iter > max_iter) {
          sol.status = QpStatus::MaxIter;
          sol.iterations = iter;
          return finish(sol);
        }
      }
    }
  }

private:
  QpSolution & finish(QpSolution & sol)
  {
    sol.x = x_;
    for (std::size_t k = 0; k < active_.size(); ++k) {
      const int id = active_[k];
      if (id >= 0) {
        sol.lambda_in(id) = u_[k];
        sol.active_rows.push_back(id);
      } else {
        sol.lambda_eq(~id) = -u_[k];
      }
    }
    std::sort(sol.active_rows.begin(), sol.active_rows.end());
    sol.objective = model_.objective(x_);
    sol.kkt = kkt_residuals(model_, x_, sol.lambda_in, sol.lambda_eq);
    return sol;
  }

  std::size_t iq() const noexcept { return active_.size(); }

  void compute_d(const Eigen::VectorXd & np) { d_.noalias() = J_.transpose() * np; }

  void update_z()
  {
    const Eigen::Index q = static_cast<Eigen::Index>(iq());
    z_.noalias() = J_.rightCols(n_ - q) * d_.tail(n_ - q);
  }

  void update_r()
  {
    const Eigen::Index q = static_cast<Eigen::Index>(iq());
    r_ = R_.topLeftCorner(q, q).triangularView<Eigen::Upper>().solve(d_.head(q));
  }

  /// The new row lies in the span of the active rows (no primal direction left).
  bool dependent() const
  {
    const Eigen::Index q = static_cast<Eigen::Index>(iq());
    const double tail = q < n_ ? d_.tail(n_ - q).norm() : 0.0;
    return tail <= 1e-12 * std::max(d_.norm(), 1e-300);
  }

  void add_constraint(int id, double multiplier)
  {
    const Eigen::Index q = static_cast<Eigen::Index>(iq());
    for (Eigen::Index j = n_ - 1; j >= q + 1; --j) {
      double cc = d_(j - 1), ss = d_(j);
      const double h = std::hypot(cc, ss);
      if (h == 0.0) { continue; }
      d_(j) = 0.0;
      ss /= h;
      cc /= h;
      if (cc < 0.0) {
        cc = -cc;
        ss = -ss;
        d_(j - 1) = -h;
      } else {
        d_(j - 1) = h;
      }
      const double xny = ss / (1.0 + cc);
      for (Eigen::Index k = 0; k < n_; ++k) {
        const double t1 = J_(k, j - 1), t2 = J_(k, j);
        J_(k, j - 1) = t1 * cc + t2 * ss;
        J_(k, j) = xny * (t1 + J_(k, j - 1)) - t2;
      }
    }
    R_.col(q).head(q + 1) = d_.head(q + 1);
    active_.push_back(id);
    u_.push_back(multiplier);
  }

  void delete_constraint(std::size_t pos)
  {
    const Eigen::Index qq = static_cast<Eigen::Index>(pos);
    const Eigen::Index q = static_cast<Eigen::Index>(iq());
    for (Eigen::Index i = qq; i < q - 1; ++i) { R_.col(i) = R_.col(i + 1); }
    R_.col(q - 1).setZero();
    active_.erase(active_.begin() + static_cast<std::ptrdiff_t>(pos));
    u_.erase(u_.begin() + static_cast<std::ptrdiff_t>(pos));
    const Eigen::Index nq = q - 1;
    for (Eigen::Index j = qq; j < nq; ++j) {
      double cc = R_(j, j), ss = R_(j + 1, j);
      const double h = std::hypot(cc, ss);
      if (h == 0.0) { continue; }
      cc /= h;
      ss /= h;
      R_(j + 1, j) = 0.0;
      if (cc < 0.0) {
        R_(j, j) = -h;
        cc = -cc;
        ss = -ss;
      } else {
        R_(j, j) = h;
      }
      const double xny = ss / (1.0 + cc);
      for (Eigen::Index k = j + 1; k < nq; ++k) {
        const double t1 = R_(j, k), t2 = R_(j + 1, k);
        R_(j, k) = t1 * cc + t2 * ss;
        R_(j + 1, k) = xny * (t1 + R_(j, k)) - t2;
      }
      for (Eigen::Index k = 0; k < n_; ++k) {
        const double t1 = J_(k, j), t2 = J_(k, j + 1);
        J_(k, j) = t1 * cc + t2 * ss;
        J_(k, j + 1) = xny * (J_(k, j) + t1) - t2;
      }
    }
  }

  const QpModel & model_;
  QpOptions opts_;
  const std::vector<char> * preferred_;
  Eigen::Index n_ = 0;
  Eigen::MatrixXd J_, R_;
  Eigen::VectorXd x_, d_, z_, r_;
  /// active rows: >= 0 inequality index, < 0 equality ~index
  std::vector<int> active_;
  std::vector<double> u_;
};

}  // namespace detail

/**
 * @brief Solve a strictly convex QP.
 *
 * The warm start only reorders which violated rows are added first (rows tight or
 * violated at the warm start go first); the returned minimizer is unique and does not
 * depend on it beyond round-off.
 */
inline QpSolution solve_qp(const QpModel & model, const std::optional<Eigen::VectorXd> & warm_start = std::nullopt,
                           const QpOptions & options = {})
{
  const Eigen::Index n = model.num_vars();
  if (model.hessian.cols() != n || model.linear.size() != n) { throw DomainError("solve_qp: inconsistent dimensions"); }
  if (model.A_in.rows() != model.b_in.size() || (model.A_in.rows() > 0 && model.A_in.cols() != n)) {
    throw DomainError("solve_qp: inconsistent inequality rows");
  }
  if (model.A_eq.rows() != model.b_eq.size() || (model.A_eq.rows() > 0 && model.A_eq.cols() != n)) {
    throw DomainError("solve_qp: inconsistent equality rows");
  }
  const auto factor = model.factor ? model.factor : HessianFactor::compute(model.hessian);

  std::vector<char> preferred;
  if (warm_start && model.A_in.rows() > 0) {
    if (warm_start->size() != n) { throw DomainError("solve_qp: warm start has wrong length"); }
    const Eigen::VectorXd slack = model.A_in * (*warm_start) - model.b_in;
    preferred.resize(static_cast<std::size_t>(slack.size()));
    for (Eigen::Index i = 0; i < slack.size(); ++i) { preferred[static_cast<std::size_t>(i)] = slack(i) > -1e-7; }
  }
  detail::DualActiveSet solver(model, *factor, options, preferred.empty() ? nullptr : &preferred);
  return solver.run();
}

inline QpSolution solve_qp(const QpModel & model, const ControlCoefficients & warm_start, const QpOptions & options = {})
{
  return solve_qp(model, std::optional<Eigen::VectorXd>(warm_start.vec()), options);
}

}  // namespace sipocp

#pragma once

/**
 * @file
 * @brief Transcription of the sampled problem G(xi; x0) into a QpModel.
 *
 * Decision variable is vec(alpha) (channel-major, see ControlCoefficients). With
 * x(t) = Phi(t) x0 + M(t) a and u(t) = S(t) a the cost is
 *   V(a) = a^T H a + f^T a + c,
 *   H = R (x) Gram + int M^T Q M dt + M(T)^T Pf M(T),
 *   f = 2 int M^T Q Phi x0 dt + 2 M(T)^T Pf Phi(T) x0,
 *   c = int x0^T Phi^T Q Phi x0 dt + x0^T Phi(T)^T Pf Phi(T) x0.
 */

#include <Eigen/Dense>

#include <algorithm>
#include <memory>
#include <vector>

#include "dynamics.hpp"
#include "error.hpp"
#include "problem.hpp"
#include "qp.hpp"

namespace sipocp {

/// xi = (t_1, ..., t_{n_var}), n_var = m N, entries in [0, T].
struct TimeSampleVector
{
  std::vector<double> times;

  /// n points evenly spaced on [0, T] including both ends (the midpoint when n = 1).
  static TimeSampleVector uniform(int n, double horizon)
  {
    TimeSampleVector xi;
    xi.times.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      xi.times[static_cast<std::size_t>(i)] = n == 1 ? 0.5 * horizon : horizon * i / (n - 1);
    }
    return xi;
  }

  std::size_t size() const noexcept { return times.size(); }

  void clamp(double horizon)
  {
    for (auto & t : times) { t = std::clamp(t, 0.0, horizon); }
  }
};

struct CostQuadratic
{
  Eigen::MatrixXd hessian;
  Eigen::VectorXd linear;
  double constant = 0.0;

  double value(const Eigen::VectorXd & a) const { return a.dot(hessian * a) + linear.dot(a) + constant; }
};

namespace detail {

/// Phi and M at every quadrature node plus the terminal time; shared by all x0.
struct NodeTable
{
  std::vector<double> w;
  std::vector<Eigen::MatrixXd> phi;
  std::vector<Eigen::MatrixXd> M;
  Eigen::MatrixXd phi_T;
  Eigen::MatrixXd M_T;
};

inline NodeTable build_node_table(const Propagator & prop)
{
  NodeTable table;
  const auto q = prop.quadrature_points();
  table.w = q.w;
  table.phi.reserve(q.t.size());
  table.M.reserve(q.t.size());
  for (double t : q.t) {
    auto op = prop.at(t);
    table.phi.push_back(std::move(op.expAt));
    table.M.push_back(std::move(op.M));
  }
  auto op_T = prop.at(prop.horizon());
  table.phi_T = std::move(op_T.expAt);
  table.M_T = std::move(op_T.M);
  return table;
}

inline bool is_zero(const Eigen::MatrixXd & X) { return X.size() == 0 || X.cwiseAbs().maxCoeff() == 0.0; }

}  // namespace detail

/**
 * @brief Sampled-constraint transcription of one problem.
 *
 * Owns the propagation engine, the x0-independent Hessian (and its factorization) and
 * the x0-dependent linear/constant cost terms. Instances for other initial states share
 * everything x0-independent via with_initial_state().
 */
class Transcription
{
public:
  explicit Transcription(OcpProblem problem, QuadratureOptions options = {})
      : problem_(std::move(problem))
  {
    check_dimensions();
    propagator_ = std::make_shared<const Propagator>(problem_.system, problem_.basis, options);
    shared_ = std::make_shared<const Shared>(build_shared(*propagator_, problem_.cost));
    cost_ = cost_for(problem_.x0);
  }

  Transcription with_initial_state(const Eigen::VectorXd & x0) const
  {
    Transcription t(*this);
    t.problem_.x0 = x0;
    t.check_dimensions();
    t.cost_ = t.cost_for(x0);
    return t;
  }

  const OcpProblem & problem() const noexcept { return problem_; }
  const Propagator & propagator() const noexcept { return *propagator_; }
  std::shared_ptr<const Propagator> shared_propagator() const noexcept { return propagator_; }
  const CostQuadratic & cost() const noexcept { return cost_; }
  /// n_var = m N
  int num_samples() const noexcept { return problem_.num_coefficients(); }

  /// V_T(x0, alpha Psi) through the quadratic form.
  double cost_value(const ControlCoefficients & c) const { return cost_.value(c.vec()); }

  /**
   * @brief Build the QP for the sample vector xi.
   *
   * Rows per sample t_i: state rows H_X x(t_i) <= h_X, then u(t_i) <= upper, then
   * -u(t_i) <= -lower. Terminal rows of X_f at t = T follow. Every row with a nonzero
   * coefficient vector is scaled to unit norm.
   */
  QpModel assemble(const TimeSampleVector & xi) const
  {
    const auto & p = problem_;
    const int n = num_samples();
    if (static_cast<int>(xi.size()) != n) {
      throw DomainError("time sample vector must have exactly m N = " + std::to_string(n) + " entries");
    }
    const int m = p.input_dim();
    const Eigen::Index k_state = p.state_set.H.rows();
    const Eigen::Index k_state_eq = p.state_set.Heq.rows();
    const Eigen::Index k_term = p.terminal_set.H.rows();
    const Eigen::Index k_term_eq = p.terminal_set.Heq.rows();
    const Eigen::Index samples = static_cast<Eigen::Index>(xi.size());

    QpModel model;
    model.hessian = cost_.hessian;
    model.linear = cost_.linear;
    model.constant = cost_.constant;
    model.factor = shared_->factor;

    const Eigen::Index n_in = samples * (k_state + 2 * m) + k_term;
    const Eigen::Index n_eq = samples * k_state_eq + k_term_eq;
    model.A_in.resize(n_in, n);
    model.b_in.resize(n_in);
    model.A_eq.resize(n_eq, n);
    model.b_eq.resize(n_eq);
    model.in_tags.reserve(static_cast<std::size_t>(n_in));
    model.eq_tags.reserve(static_cast<std::size_t>(n_eq));

    Eigen::Index r_in = 0, r_eq = 0;
    auto push_in = [&](const Eigen::RowVectorXd & a, double b, RowTag tag) {
      model.A_in.row(r_in) = a;
      model.b_in(r_in) = b;
      ++r_in;
      model.in_tags.push_back(tag);
    };
    auto push_eq = [&](const Eigen::RowVectorXd & a, double b, RowTag tag) {
      model.A_eq.row(r_eq) = a;
      model.b_eq(r_eq) = b;
      ++r_eq;
      model.eq_tags.push_back(tag);
    };

    for (Eigen::Index i = 0; i < samples; ++i) {
      const double t = xi.times[static_cast<std::size_t>(i)];
      const auto op = propagator_->at(t);
      const Eigen::VectorXd free = op.expAt * p.x0;
      const int sample = static_cast<int>(i);
      for (Eigen::Index r = 0; r < k_state; ++r) {
        push_in(p.state_set.H.row(r) * op.M, p.state_set.h(r) - p.state_set.H.row(r).dot(free),
                {RowTag::Kind::State, sample, static_cast<int>(r)});
      }
      for (Eigen::Index r = 0; r < k_state_eq; ++r) {
        push_eq(p.state_set.Heq.row(r) * op.M, p.state_set.heq(r) - p.state_set.Heq.row(r).dot(free),
                {RowTag::Kind::State, sample, static_cast<int>(r)});
      }
      const Eigen::MatrixXd S = propagator_->control_matrix(t);
      for (int j = 0; j < m; ++j) {
        push_in(S.row(j), p.control_box.upper(j), {RowTag::Kind::Control, sample, j});
      }
      for (int j = 0; j < m; ++j) {
        push_in(-S.row(j), -p.control_box.lower(j), {RowTag::Kind::Control, sample, m + j});
      }
    }

    const Eigen::VectorXd free_T = shared_->nodes.phi_T * p.x0;
    const Eigen::MatrixXd & M_T = shared_->nodes.M_T;
    for (Eigen::Index r = 0; r < k_term; ++r) {
      push_in(p.terminal_set.H.row(r) * M_T, p.terminal_set.h(r) - p.terminal_set.H.row(r).dot(free_T),
              {RowTag::Kind::Terminal, -1, static_cast<int>(r)});
    }
    for (Eigen::Index r = 0; r < k_term_eq; ++r) {
      push_eq(p.terminal_set.Heq.row(r) * M_T, p.terminal_set.heq(r) - p.terminal_set.Heq.row(r).dot(free_T),
              {RowTag::Kind::Terminal, -1, static_cast<int>(r)});
    }

    model.in_scale = normalize_rows(model.A_in, model.b_in);
    normalize_rows(model.A_eq, model.b_eq);
    return model;
  }

private:
  struct Shared
  {
    detail::NodeTable nodes;
    Eigen::MatrixXd hessian;
    std::shared_ptr<const HessianFactor> factor;
  };

  static Shared build_shared(const Propagator & prop, const CostSpec & cost)
  {
    Shared s;
    s.nodes = detail::build_node_table(prop);
    const int m = prop.input_dim();
    const int N = prop.basis().size();
    const Eigen::MatrixXd & gram = prop.basis().gram();

    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(m * N, m * N);
    for (int i = 0; i < m; ++i) {
      for (int k = 0; k < m; ++k) {
        if (cost.R(i, k) != 0.0) { H.block(i * N, k * N, N, N) = cost.R(i, k) * gram; }
      }
    }
    if (!detail::is_zero(cost.Q)) {
      for (std::size_t q = 0; q < s.nodes.w.size(); ++q) {
        H.noalias() += s.nodes.w[q] * s.nodes.M[q].transpose() * cost.Q * s.nodes.M[q];
      }
    }
    if (!detail::is_zero(cost.Pf)) { H.noalias() += s.nodes.M_T.transpose() * cost.Pf * s.nodes.M_T; }
    s.hessian = 0.5 * (H + H.transpose());
    s.factor = HessianFactor::compute(s.hessian);
    return s;
  }

  CostQuadratic cost_for(const Eigen::VectorXd & x0) const
  {
    const auto & cost = problem_.cost;
    const auto & nodes = shared_->nodes;
    CostQuadratic c;
    c.hessian = shared_->hessian;
    c.linear = Eigen::VectorXd::Zero(num_samples());
    c.constant = 0.0;
    if (!detail::is_zero(cost.Q)) {
      for (std::size_t q = 0; q < nodes.w.size(); ++q) {
        const Eigen::VectorXd Qx = cost.Q * (nodes.phi[q] * x0);
        c.linear.noalias() += 2.0 * nodes.w[q] * nodes.M[q].transpose() * Qx;
        c.constant += nodes.w[q] * (nodes.phi[q] * x0).dot(Qx);
      }
    }
    if (!detail::is_zero(cost.Pf)) {
      const Eigen::VectorXd xT = nodes.phi_T * x0;
      c.linear.noalias() += 2.0 * nodes.M_T.transpose() * (cost.Pf * xT);
      c.constant += xT.dot(cost.Pf * xT);
    }
    return c;
  }

  /// Scale nonzero rows to unit norm; returns the divisors (1 for zero rows).
  static Eigen::VectorXd normalize_rows(Eigen::MatrixXd & A, Eigen::VectorXd & b)
  {
    Eigen::VectorXd scale = Eigen::VectorXd::Ones(A.rows());
    for (Eigen::Index r = 0; r < A.rows(); ++r) {
      const double norm = A.row(r).norm();
      if (norm > 0.0) {
        A.row(r) /= norm;
        b(r) /= norm;
        scale(r) = norm;
      }
    }
    return scale;
  }

  void check_dimensions() const
  {
    const auto & p = problem_;
    p.system.check();
    const int d = p.state_dim(), m = p.input_dim();
    if (p.x0.size() != d) { throw ValidationError("initial state must have " + std::to_string(d) + " entries", "x0"); }
    if (p.cost.Q.rows() != d || p.cost.Q.cols() != d) { throw ValidationError("Q must be d x d", "cost.Q"); }
    if (p.cost.R.rows() != m || p.cost.R.cols() != m) { throw ValidationError("R must be m x m", "cost.R"); }
    if (p.cost.Pf.rows() != d || p.cost.Pf.cols() != d) { throw ValidationError("Pf must be d x d", "cost.Pf"); }
    p.state_set.check(d, "constraints.state");
    p.terminal_set.check(d, "constraints.terminal");
    if (p.control_box.lower.size() != m || p.control_box.upper.size() != m) {
      throw ValidationError("control bounds must have m entries", "constraints.control");
    }
  }

  OcpProblem problem_;
  std::shared_ptr<const Propagator> propagator_;
  std::shared_ptr<const Shared> shared_;
  CostQuadratic cost_;
};

/// (H, f, c) of V_T(x0, alpha Psi) for the transcription's initial state.
inline const CostQuadratic & cost_quadratic(const Transcription & tr) { return tr.cost(); }

inline QpModel assemble_qp(const Transcription & tr, const TimeSampleVector & xi) { return tr.assemble(xi); }

}  // namespace sipocp

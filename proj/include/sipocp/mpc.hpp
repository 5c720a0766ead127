#pragma once

/**
 * @file
 * @brief Receding-horizon closed loop: re-solve from the current state every h seconds,
 * apply the first h seconds of the recovered control and track the value descent.
 */

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

#include "annealing.hpp"
#include "dynamics.hpp"
#include "error.hpp"
#include "lqr.hpp"
#include "problem.hpp"
#include "quadrature.hpp"
#include "transcription.hpp"

namespace sipocp {

struct MpcConfig
{
  /// resampling interval h
  double interval = 0.5;
  int steps = 10;
  /// terminal feedback g_F(z) = K z; the LQR gain of (A, B, Q, R) when absent
  std::optional<Eigen::MatrixXd> terminal_gain;
  /// annealing settings for every re-solve (the seed is offset by the step index)
  SaConfig sa;
  /// relative tolerance of the descent test r_k <= tol (1 + |V_k|)
  double descent_tolerance = 1e-2;
  /// points per applied segment in the fine trace
  int segment_samples = 51;

  void check(double horizon) const
  {
    if (!(interval > 0.0) || interval > horizon) {
      throw ValidationError("interval must lie in (0, T]", "mpc.interval");
    }
    if (steps < 1) { throw ValidationError("steps must be at least 1", "mpc.steps"); }
    if (segment_samples < 2) { throw ValidationError("segment_samples must be at least 2", "mpc.segment_samples"); }
    sa.check();
  }
};

struct MpcStep
{
  double time = 0.0;
  Eigen::VectorXd state;
  ControlCoefficients alpha;
  /// G_max of this step's solve, the estimate of V_T*(x_k)
  double value = 0.0;
  /// integral of l(x, u) over the applied segment
  double stage_cost = 0.0;
  /// V(x_{k+1}) - V(x_k) + stage_cost
  double residual = 0.0;
  bool descent_ok = false;
  TimeSampleVector best_xi;
};

struct ClosedLoopTrace
{
  std::vector<MpcStep> steps;
  /// state reached after the last applied segment
  Eigen::VectorXd final_state;
  double final_time = 0.0;
  /// value estimate at final_state
  double final_value = 0.0;
  /// step index whose solve found no feasible sample, if any
  std::optional<int> infeasible_at;
  std::string diagnostics;

  Eigen::MatrixXd terminal_gain;
  ClfCheck clf;

  /// fine samples of the applied trajectory: time, state, control
  std::vector<double> fine_t;
  std::vector<Eigen::VectorXd> fine_x;
  std::vector<Eigen::VectorXd> fine_u;

  int descent_passes() const
  {
    int n = 0;
    for (const auto & s : steps) { n += s.descent_ok ? 1 : 0; }
    return n;
  }

  double descent_pass_rate() const
  {
    return steps.empty() ? 0.0 : static_cast<double>(descent_passes()) / static_cast<double>(steps.size());
  }

  std::string status() const
  {
    return infeasible_at ? "InfeasibleAt(" + std::to_string(*infeasible_at) + ")" : "Completed";
  }
};

namespace detail {

/// Sample times moved back by h, clamped into [0, T].
inline TimeSampleVector shift_samples(TimeSampleVector xi, double h, double horizon)
{
  for (auto & t : xi.times) { t -= h; }
  xi.clamp(horizon);
  return xi;
}

/// integral_0^h l(x(t), u(t)) dt by composite Gauss-Legendre on the propagation panels.
inline double stage_integral(const OcpProblem & p, const Propagator & prop, const Eigen::VectorXd & x0,
                             const ControlCoefficients & c, double h)
{
  const int panels = std::max(1, static_cast<int>(std::ceil(prop.panels() * h / prop.horizon())));
  const auto q = composite_gauss_legendre(0.0, h, panels, gauss_legendre(prop.nodes_per_panel()));
  double sum = 0.0;
  for (std::size_t i = 0; i < q.t.size(); ++i) {
    sum += q.w[i] * p.cost.stage(prop.state_at(x0, c, q.t[i]), prop.control_at(c, q.t[i]));
  }
  return sum;
}

}  // namespace detail

/**
 * @brief Closed-loop simulation under u(x) = u*(0; x) held for h seconds at a time.
 *
 * Step k solves from x_k with the previous best sample vector shifted by h as the starting
 * point, applies the recovered control on [0, h] through the exact LTI solution and records
 * r_k = V(x_{k+1}) - V(x_k) + integral of l. One extra solve after the last step supplies
 * V(x_K) for the final residual. A step whose solve finds no feasible sample truncates the
 * trace and sets infeasible_at.
 */
inline ClosedLoopTrace simulate_mpc(const OcpProblem & problem, const MpcConfig & config)
{
  config.check(problem.horizon());
  ClosedLoopTrace trace;
  trace.terminal_gain = config.terminal_gain ? *config.terminal_gain : lqr(problem).K;
  trace.clf = check_clf(problem, trace.terminal_gain);

  const Transcription base(problem);
  const Propagator & prop = base.propagator();
  const double h = config.interval;
  const double T = problem.horizon();

  Eigen::VectorXd x = problem.x0;
  std::optional<TimeSampleVector> warm;
  auto solve_from = [&](const Eigen::VectorXd & state, int k) {
    SaConfig cfg = config.sa;
    cfg.seed = config.sa.seed + static_cast<std::uint64_t>(k);
    return run_sa(base.with_initial_state(state), cfg, warm);
  };

  for (int k = 0; k <= config.steps; ++k) {
    SolveReport rep;
    try {
      rep = solve_from(x, k);
    } catch (const InfeasibleError & e) {
      trace.infeasible_at = k;
      trace.diagnostics = e.what();
      break;
    }
    if (k > 0) {
      auto & prev = trace.steps.back();
      prev.residual = rep.G_max - prev.value + prev.stage_cost;
      prev.descent_ok = prev.residual <= config.descent_tolerance * (1.0 + std::abs(prev.value));
    }
    if (k == config.steps) {
      trace.final_value = rep.G_max;
      break;
    }

    MpcStep step;
    step.time = k * h;
    step.state = x;
    step.alpha = rep.best_alpha;
    step.value = rep.G_max;
    step.best_xi = rep.best_xi;
    step.stage_cost = detail::stage_integral(problem, prop, x, rep.best_alpha, h);
    for (int i = 0; i < config.segment_samples; ++i) {
      const double t = h * i / (config.segment_samples - 1);
      if (k > 0 && i == 0) { continue; }
      trace.fine_t.push_back(step.time + t);
      trace.fine_x.push_back(prop.state_at(x, rep.best_alpha, t));
      trace.fine_u.push_back(prop.control_at(rep.best_alpha, t));
    }
    x = prop.state_at(x, rep.best_alpha, h);
    warm = detail::shift_samples(rep.best_xi, h, T);
    trace.steps.push_back(std::move(step));
  }
  trace.final_state = x;
  trace.final_time = static_cast<double>(trace.steps.size()) * h;
  return trace;
}

}  // namespace sipocp

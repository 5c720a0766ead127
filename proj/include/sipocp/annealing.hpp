#pragma once

/**
 * @file
 * @brief Outer global search: simulated annealing over xi in [0, T]^{n_var} maximizing G.
 *
 * Each iteration proposes a perturbed sample vector, evaluates G by solving the sampled
 * QP, applies a Metropolis test against the current state and keeps the best-so-far
 * value and minimizer (a sample replaces the best whenever G_n >= G_max).
 */

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <vector>

#include "dynamics.hpp"
#include "error.hpp"
#include "parallel.hpp"
#include "qp.hpp"
#include "transcription.hpp"

namespace sipocp {

struct SaConfig
{
  /// iteration budget tau
  int iterations = 250;
  std::uint64_t seed = 0;
  /// nullopt: 0.1 |G(xi^0)| with a floor of 1e-3
  std::optional<double> initial_temperature;
  double cooling_factor = 0.97;
  /// proposal standard deviation sigma_n = proposal_sigma0 * T * sigma_decay^n
  double proposal_sigma0 = 0.1;
  double sigma_decay = 0.995;
  int parallel_candidates = 1;
  /// workers for candidate evaluation; 0 reads SIPOCP_THREADS
  int threads = 0;

  void check() const
  {
    if (iterations < 0) { throw ValidationError("iterations must be nonnegative", "sa.iterations"); }
    if (initial_temperature && !(*initial_temperature > 0.0)) {
      throw ValidationError("initial_temperature must be positive", "sa.initial_temperature");
    }
    if (!(cooling_factor > 0.0 && cooling_factor < 1.0)) {
      throw ValidationError("cooling_factor must lie in (0, 1)", "sa.cooling_factor");
    }
    if (!(proposal_sigma0 > 0.0)) { throw ValidationError("proposal_sigma0 must be positive", "sa.proposal_sigma0"); }
    if (!(sigma_decay > 0.0 && sigma_decay <= 1.0)) {
      throw ValidationError("sigma_decay must lie in (0, 1]", "sa.sigma_decay");
    }
    if (parallel_candidates < 1) {
      throw ValidationError("parallel_candidates must be positive", "sa.parallel_candidates");
    }
  }
};

struct SaHistoryEntry
{
  int iteration = 0;
  /// G of the (best) candidate; NaN when every candidate QP was infeasible
  double G = std::numeric_limits<double>::quiet_NaN();
  bool feasible = false;
  bool accepted = false;
  double temperature = 0.0;
  double sigma = 0.0;
  /// running maximum after this iteration
  double G_max = -std::numeric_limits<double>::infinity();
};

struct QpStats
{
  int solves = 0;
  int infeasible = 0;
  int max_iter = 0;
  long total_iterations = 0;
  double worst_primal = 0.0;
  double worst_dual = 0.0;
  double worst_complementarity = 0.0;

  void record(const QpSolution & s)
  {
    ++solves;
    total_iterations += s.iterations;
    if (s.status == QpStatus::Infeasible) { ++infeasible; }
    if (s.status == QpStatus::MaxIter) { ++max_iter; }
    if (s.optimal()) {
      worst_primal = std::max(worst_primal, s.kkt.primal);
      worst_dual = std::max(worst_dual, s.kkt.dual);
      worst_complementarity = std::max(worst_complementarity, s.kkt.complementarity);
    }
  }
};

struct SolveReport
{
  TimeSampleVector initial_xi;
  double G_initial = -std::numeric_limits<double>::infinity();
  TimeSampleVector best_xi;
  ControlCoefficients best_alpha;
  double G_max = -std::numeric_limits<double>::infinity();
  /// iteration at which G_max was last updated (0 = initial sample)
  int best_iteration = 0;
  std::vector<SaHistoryEntry> history;
  QpStats qp_stats;
  /// schedule actually used (initial temperature resolved)
  SaConfig config;
  double wall_time = 0.0;
};

/// One evaluation of G(xi; x0).
struct GEvaluation
{
  bool feasible = false;
  double value = -std::numeric_limits<double>::infinity();
  QpSolution solution;
};

inline GEvaluation evaluate_g(const Transcription & tr, const TimeSampleVector & xi,
                              const std::optional<Eigen::VectorXd> & warm_start = std::nullopt)
{
  GEvaluation ev;
  ev.solution = solve_qp(tr.assemble(xi), warm_start);
  ev.feasible = ev.solution.optimal();
  if (ev.feasible) { ev.value = ev.solution.objective; }
  return ev;
}

/// Fold x into [0, T] by reflection at both ends.
inline double reflect_into(double x, double horizon)
{
  const double period = 2.0 * horizon;
  double y = std::fmod(std::abs(x), period);
  if (y > horizon) { y = period - y; }
  return y;
}

/// Independent N(0, sigma^2) perturbation of every coordinate, reflected into [0, T].
inline TimeSampleVector propose(const TimeSampleVector & xi, double sigma, double horizon, std::mt19937_64 & rng)
{
  TimeSampleVector out = xi;
  if (!(sigma > 0.0)) { return out; }
  std::normal_distribution<double> noise(0.0, sigma);
  for (auto & t : out.times) { t = reflect_into(t + noise(rng), horizon); }
  return out;
}

/// Metropolis rule for maximization: uphill always, downhill with probability e^{(G' - G) / temp}.
inline bool metropolis_accept(double candidate, double current, double temperature, std::mt19937_64 & rng)
{
  if (candidate >= current) { return true; }
  if (!(temperature > 0.0)) { return false; }
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  return unif(rng) < std::exp((candidate - current) / temperature);
}

/**
 * @brief Best-so-far sample-vector search with simulated annealing as the sampler.
 *
 * @param initial  starting sample vector; defaults to the uniform grid on [0, T]
 * @throws InfeasibleError when no evaluated sample vector gives a feasible QP
 */
inline SolveReport run_sa(const Transcription & tr, const SaConfig & config,
                          const std::optional<TimeSampleVector> & initial = std::nullopt)
{
  config.check();
  const auto start = std::chrono::steady_clock::now();
  const double T = tr.problem().horizon();
  const int n = tr.num_samples();
  const int m = tr.problem().input_dim();
  const int N = tr.problem().basis.size();

  SolveReport rep;
  rep.config = config;
  rep.initial_xi = initial.value_or(TimeSampleVector::uniform(n, T));
  rep.initial_xi.clamp(T);
  if (static_cast<int>(rep.initial_xi.size()) != n) {
    throw DomainError("initial sample vector must have m N = " + std::to_string(n) + " entries");
  }

  std::mt19937_64 rng(config.seed);
  const int threads = config.threads > 0 ? config.threads : default_thread_count();

  auto initial_eval = evaluate_g(tr, rep.initial_xi);
  rep.qp_stats.record(initial_eval.solution);
  TimeSampleVector current_xi = rep.initial_xi;
  double current_G = initial_eval.value;
  std::optional<Eigen::VectorXd> current_alpha;
  rep.G_initial = initial_eval.value;
  if (initial_eval.feasible) {
    rep.G_max = initial_eval.value;
    rep.best_xi = rep.initial_xi;
    rep.best_alpha = ControlCoefficients::from_vec(initial_eval.solution.x, m, N);
    current_alpha = initial_eval.solution.x;
  }

  const double temp0 = config.initial_temperature.value_or(
      std::max(1e-3, 0.1 * (initial_eval.feasible ? std::abs(initial_eval.value) : 0.0)));
  rep.config.initial_temperature = temp0;

  const int k = config.parallel_candidates;
  std::vector<TimeSampleVector> candidates(static_cast<std::size_t>(k));
  std::vector<GEvaluation> evals(static_cast<std::size_t>(k));

  for (int it = 1; it <= config.iterations; ++it) {
    const double sigma = config.proposal_sigma0 * T * std::pow(config.sigma_decay, it);
    const double temperature = temp0 * std::pow(config.cooling_factor, it - 1);

    // proposals drawn sequentially so the run is reproducible for any worker count
    for (auto & c : candidates) { c = propose(current_xi, sigma, T, rng); }
    parallel_for(k, threads, [&](int i) {
      evals[static_cast<std::size_t>(i)] = evaluate_g(tr, candidates[static_cast<std::size_t>(i)], current_alpha);
    });

    int pick = -1;
    for (int i = 0; i < k; ++i) {
      const auto & e = evals[static_cast<std::size_t>(i)];
      rep.qp_stats.record(e.solution);
      if (e.feasible && (pick < 0 || e.value > evals[static_cast<std::size_t>(pick)].value)) { pick = i; }
    }

    SaHistoryEntry entry;
    entry.iteration = it;
    entry.temperature = temperature;
    entry.sigma = sigma;
    if (pick >= 0) {
      const auto & e = evals[static_cast<std::size_t>(pick)];
      entry.feasible = true;
      entry.G = e.value;
      if (e.value >= rep.G_max) {
        rep.G_max = e.value;
        rep.best_xi = candidates[static_cast<std::size_t>(pick)];
        rep.best_alpha = ControlCoefficients::from_vec(e.solution.x, m, N);
        rep.best_iteration = it;
      }
      // infeasible proposals are never accepted
      if (metropolis_accept(e.value, current_G, temperature, rng)) {
        entry.accepted = true;
        current_xi = candidates[static_cast<std::size_t>(pick)];
        current_G = e.value;
        current_alpha = e.solution.x;
      }
    }
    entry.G_max = rep.G_max;
    rep.history.push_back(entry);
  }

  rep.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (!std::isfinite(rep.G_max)) {
    throw InfeasibleError("no feasible sample found: every sampled QP was infeasible");
  }
  return rep;
}

inline SolveReport run_sa(const OcpProblem & problem, const SaConfig & config)
{
  return run_sa(Transcription(problem), config);
}

}  // namespace sipocp

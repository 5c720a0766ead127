#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "oracles.hpp"
#include "sipocp/annealing.hpp"

using namespace sipocp;

namespace {

SaConfig small_config(int iterations, std::uint64_t seed = 3)
{
  SaConfig c;
  c.iterations = iterations;
  c.seed = seed;
  c.threads = 1;
  return c;
}

const Transcription & bd11()
{
  static const Transcription tr(oracle::bryson_denham(11));
  return tr;
}

}  // namespace

TEST(Annealing, ZeroIterationsReturnsTheInitialSample)
{
  const SolveReport r = run_sa(bd11(), small_config(0));
  EXPECT_TRUE(r.history.empty());
  EXPECT_EQ(r.G_max, r.G_initial);
  EXPECT_EQ(r.best_iteration, 0);
  EXPECT_EQ(r.best_xi.times, TimeSampleVector::uniform(11, 1.0).times);
}

TEST(Annealing, BestSoFarIsMonotoneAndEqualsTheHistoryMaximum)
{
  const SolveReport r = run_sa(bd11(), small_config(120));
  ASSERT_EQ(r.history.size(), 120u);
  double running = r.G_initial;
  for (const auto & h : r.history) {
    if (h.feasible) { running = std::max(running, h.G); }
    EXPECT_EQ(h.G_max, running) << "iteration " << h.iteration;
    if (!h.feasible) {
      EXPECT_TRUE(std::isnan(h.G));
      EXPECT_FALSE(h.accepted);
    }
  }
  EXPECT_EQ(r.G_max, running);
  EXPECT_GE(r.G_max, r.G_initial);
  if (r.best_iteration > 0) { EXPECT_EQ(r.history[static_cast<std::size_t>(r.best_iteration - 1)].G, r.G_max); }
}

TEST(Annealing, ScheduleFollowsTheConfiguredDecay)
{
  SaConfig c = small_config(30);
  c.initial_temperature = 2.0;
  const SolveReport r = run_sa(bd11(), c);
  for (const auto & h : r.history) {
    EXPECT_DOUBLE_EQ(h.sigma, 0.1 * 1.0 * std::pow(0.995, h.iteration));
    EXPECT_DOUBLE_EQ(h.temperature, 2.0 * std::pow(0.97, h.iteration - 1));
  }
}

TEST(Annealing, SameSeedIsBitwiseReproducible)
{
  const SolveReport a = run_sa(bd11(), small_config(80, 11));
  const SolveReport b = run_sa(bd11(), small_config(80, 11));
  EXPECT_EQ(a.best_xi.times, b.best_xi.times);
  EXPECT_EQ(a.best_alpha.alpha, b.best_alpha.alpha);
  EXPECT_EQ(a.G_max, b.G_max);
  ASSERT_EQ(a.history.size(), b.history.size());
  for (std::size_t i = 0; i < a.history.size(); ++i) {
    EXPECT_EQ(a.history[i].accepted, b.history[i].accepted);
    if (a.history[i].feasible) { EXPECT_EQ(a.history[i].G, b.history[i].G); }
  }
}

TEST(Annealing, WorkerCountDoesNotChangeTheResult)
{
  SaConfig c = small_config(40, 5);
  c.parallel_candidates = 4;
  const SolveReport one = run_sa(bd11(), c);
  c.threads = 4;
  const SolveReport four = run_sa(bd11(), c);
  EXPECT_EQ(one.best_xi.times, four.best_xi.times);
  EXPECT_EQ(one.G_max, four.G_max);
  EXPECT_EQ(one.best_alpha.alpha, four.best_alpha.alpha);
}

TEST(Annealing, VanishingStepKeepsTheInitialValue)
{
  SaConfig c = small_config(20);
  c.proposal_sigma0 = 1e-300;
  const SolveReport r = run_sa(bd11(), c);
  EXPECT_NEAR(r.G_max, r.G_initial, 1e-12 * std::abs(r.G_initial));
  for (const auto & h : r.history) { EXPECT_NEAR(h.G, r.G_initial, 1e-12 * std::abs(r.G_initial)); }
}

TEST(Annealing, BestCoefficientsSatisfyTheBestSampledRows)
{
  const SolveReport r = run_sa(bd11(), small_config(60));
  const QpModel m = bd11().assemble(r.best_xi);
  const Eigen::VectorXd a = r.best_alpha.vec();
  EXPECT_LE((m.A_in * a - m.b_in).maxCoeff(), 1e-9);
  EXPECT_LE((m.A_eq * a - m.b_eq).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_NEAR(m.objective(a), r.G_max, 1e-9 * r.G_max);
}

TEST(Annealing, NoFeasibleSampleThrows)
{
  OcpProblem p = oracle::bryson_denham(1);
  p.terminal_set = Polytope::point(Eigen::Vector2d(0.0, 0.0));
  EXPECT_THROW((void)run_sa(Transcription(p), small_config(10)), InfeasibleError);
}

TEST(Annealing, BadConfigurationNamesTheField)
{
  SaConfig c = small_config(10);
  c.cooling_factor = 1.0;
  try {
    (void)run_sa(bd11(), c);
    FAIL();
  } catch (const ValidationError & e) {
    EXPECT_EQ(e.field(), "sa.cooling_factor");
  }
}

TEST(Proposal, ReflectionStaysInTheHorizon)
{
  EXPECT_DOUBLE_EQ(reflect_into(-0.2, 1.0), 0.2);
  EXPECT_DOUBLE_EQ(reflect_into(1.3, 1.0), 0.7);
  EXPECT_DOUBLE_EQ(reflect_into(2.5, 1.0), 0.5);
  EXPECT_DOUBLE_EQ(reflect_into(0.4, 1.0), 0.4);
  std::mt19937_64 rng(1);
  TimeSampleVector xi;
  xi.times = {0.0, 0.01, 0.5, 0.99, 1.0};
  for (int k = 0; k < 2000; ++k) {
    const TimeSampleVector y = propose(xi, 0.7, 1.0, rng);
    for (double t : y.times) {
      EXPECT_GE(t, 0.0);
      EXPECT_LE(t, 1.0);
    }
  }
}

TEST(Proposal, StepSpreadMatchesSigma)
{
  std::mt19937_64 rng(2);
  TimeSampleVector xi;
  xi.times.assign(50, 5.0);
  const double sigma = 0.05;
  double sum = 0.0, sq = 0.0;
  int count = 0;
  for (int k = 0; k < 400; ++k) {
    for (double t : propose(xi, sigma, 10.0, rng).times) {
      sum += t - 5.0;
      sq += (t - 5.0) * (t - 5.0);
      ++count;
    }
  }
  const double mean = sum / count;
  const double sd = std::sqrt(sq / count - mean * mean);
  EXPECT_NEAR(sd, sigma, 0.05 * sigma);
  EXPECT_NEAR(mean, 0.0, 5.0 * sigma / std::sqrt(count));
}

TEST(Proposal, MetropolisRule)
{
  std::mt19937_64 rng(4);
  EXPECT_TRUE(metropolis_accept(2.0, 1.0, 0.0, rng));
  EXPECT_FALSE(metropolis_accept(0.5, 1.0, 0.0, rng));
  int accepted = 0;
  for (int k = 0; k < 20000; ++k) { accepted += metropolis_accept(0.0, 1.0, 1.0, rng); }
  EXPECT_NEAR(accepted / 20000.0, std::exp(-1.0), 0.015);
}

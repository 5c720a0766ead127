#include <gtest/gtest.h>

#include <algorithm>

#include "oracles.hpp"
#include "sipocp/validate.hpp"

using namespace sipocp;
using Eigen::MatrixXd;

namespace {

bool contains(const std::vector<std::string> & lines, const std::string & needle)
{
  return std::any_of(lines.begin(), lines.end(), [&](const std::string & s) { return s.find(needle) != std::string::npos; });
}

}  // namespace

TEST(Validate, BenchmarksAreValid)
{
  const ValidationReport bd = validate(oracle::bryson_denham(51));
  EXPECT_TRUE(bd.valid);
  EXPECT_TRUE(bd.errors.empty());
  EXPECT_TRUE(contains(bd.notes, "equality-only"));

  const ValidationReport pend = validate(oracle::pendulum(51));
  EXPECT_TRUE(pend.valid);
  EXPECT_TRUE(pend.slater_verified);
  EXPECT_GT(pend.slater_margin, 0.0);
  ASSERT_TRUE(pend.slater_point.has_value());
}

TEST(Validate, SlaterPointIsStrictlyFeasibleOnADenseGrid)
{
  const OcpProblem p = oracle::pendulum(51);
  const ValidationReport rep = validate(p);
  ASSERT_TRUE(rep.slater_point.has_value());
  const Propagator prop(p.system, p.basis);
  for (int k = 0; k <= 400; ++k) {
    const double t = p.horizon() * k / 400.0;
    EXPECT_LT(p.state_set.max_violation(prop.state_at(p.x0, *rep.slater_point, t)), 0.0) << "t = " << t;
    EXPECT_LT(p.control_box.max_violation(prop.control_at(*rep.slater_point, t)), 0.0);
  }
}

TEST(Validate, IndefiniteRIsRejectedWithField)
{
  OcpProblem p = oracle::bryson_denham(11);
  p.cost.R(0, 0) = -1.0;
  const ValidationReport rep = validate(p);
  EXPECT_FALSE(rep.valid);
  EXPECT_EQ(rep.field, "cost.R");
  try {
    require_valid(rep);
    FAIL();
  } catch (const ValidationError & e) {
    EXPECT_EQ(e.field(), "cost.R");
    EXPECT_NE(std::string(e.what()).find("R must be positive definite"), std::string::npos);
  }
}

TEST(Validate, SemidefiniteChecks)
{
  OcpProblem p = oracle::pendulum(11);
  p.cost.Q = MatrixXd::Zero(4, 4);
  p.cost.Q(1, 2) = 1.0;
  EXPECT_EQ(validate(p, {.run_slater_probe = false}).field, "cost.Q");
  p = oracle::pendulum(11);
  p.cost.Pf = -MatrixXd::Identity(4, 4);
  EXPECT_EQ(validate(p, {.run_slater_probe = false}).field, "cost.Pf");
  p = oracle::pendulum(11);
  p.cost.Q = MatrixXd::Zero(4, 4);
  p.cost.Q(0, 0) = 1.0;  // semidefinite is fine for Q
  EXPECT_TRUE(validate(p, {.run_slater_probe = false}).valid);
}

TEST(Validate, OriginMustBeInteriorOfStateSet)
{
  OcpProblem p = oracle::pendulum(11);
  p.state_set.h(1) = 0.0;
  const ValidationReport rep = validate(p, {.run_slater_probe = false});
  EXPECT_FALSE(rep.valid);
  EXPECT_EQ(rep.field, "constraints.state");
}

TEST(Validate, TerminalSetOutsideStateSetIsAnError)
{
  OcpProblem p = oracle::pendulum(11);
  p.terminal_set = Polytope::symmetric_box(Eigen::Vector4d(0.02, 0.2, 0.02, 0.02));
  const ValidationReport rep = validate(p, {.run_slater_probe = false});
  EXPECT_FALSE(rep.valid);
  EXPECT_EQ(rep.field, "constraints.terminal");
}

TEST(Validate, ControlBoxNeedsInterior)
{
  OcpProblem p = oracle::bryson_denham(11);
  p.control_box.lower(0) = p.control_box.upper(0);
  EXPECT_EQ(validate(p).field, "constraints.control");
}

TEST(Validate, ShapeErrorsNameTheField)
{
  OcpProblem p = oracle::bryson_denham(11);
  p.x0 = Eigen::Vector3d::Zero();
  EXPECT_EQ(validate(p).field, "x0");
  p = oracle::bryson_denham(11);
  p.system.B = MatrixXd::Ones(3, 1);
  EXPECT_FALSE(validate(p).valid);
}

TEST(Validate, WarningsForMissingTerminalSetAndInfeasibleStart)
{
  OcpProblem p = oracle::pendulum(11);
  p.terminal_set = Polytope::whole(4);
  EXPECT_TRUE(contains(validate(p, {.run_slater_probe = false}).warnings, "no terminal constraint"));
  p = oracle::pendulum(11);
  p.x0(1) = 0.2;
  EXPECT_TRUE(contains(validate(p, {.run_slater_probe = false}).warnings, "x0 lies outside"));
}

TEST(Validate, IsDeterministic)
{
  const OcpProblem p = oracle::pendulum(21);
  const ValidationReport a = validate(p), b = validate(p);
  EXPECT_EQ(a.warnings, b.warnings);
  EXPECT_EQ(a.slater_margin, b.slater_margin);
}

#include <gtest/gtest.h>

#include <filesystem>

#include "sipocp/benchmarks.hpp"
#include "sipocp/problem_file.hpp"

using namespace sipocp;

namespace {

const std::string kMinimal = R"(
name = "double integrator"
horizon = 2.0
x0 = [1.0, 0.0]

[system]
A = [[0.0, 1.0], [0.0, 0.0]]
B = [[0.0], [1.0]]

[basis]
kind = "fourier"
N = 9

[constraints.state]
bound = [2.0, 1.5]

[constraints.terminal]
bound = [0.1, 0.1]

[constraints.control]
bound = [3.0]
)";

void expect_same(const ProblemFile & a, const ProblemFile & b)
{
  const OcpProblem &p = a.problem, &q = b.problem;
  EXPECT_EQ(p.name, q.name);
  EXPECT_EQ(p.horizon(), q.horizon());
  EXPECT_EQ(p.x0, q.x0);
  EXPECT_EQ(p.system.A, q.system.A);
  EXPECT_EQ(p.system.B, q.system.B);
  EXPECT_EQ(p.cost.Q, q.cost.Q);
  EXPECT_EQ(p.cost.R, q.cost.R);
  EXPECT_EQ(p.cost.Pf, q.cost.Pf);
  EXPECT_EQ(p.basis.kind(), q.basis.kind());
  EXPECT_EQ(p.basis.size(), q.basis.size());
  EXPECT_EQ(p.state_set.H, q.state_set.H);
  EXPECT_EQ(p.state_set.h, q.state_set.h);
  EXPECT_EQ(p.terminal_set.H, q.terminal_set.H);
  EXPECT_EQ(p.terminal_set.h, q.terminal_set.h);
  EXPECT_EQ(p.terminal_set.Heq, q.terminal_set.Heq);
  EXPECT_EQ(p.terminal_set.heq, q.terminal_set.heq);
  EXPECT_EQ(p.control_box.lower, q.control_box.lower);
  EXPECT_EQ(p.control_box.upper, q.control_box.upper);
  EXPECT_EQ(p.control_box_is_default, q.control_box_is_default);
  EXPECT_EQ(a.sa.iterations, b.sa.iterations);
  EXPECT_EQ(a.sa.seed, b.sa.seed);
  EXPECT_EQ(a.sa.cooling_factor, b.sa.cooling_factor);
  EXPECT_EQ(a.sa.proposal_sigma0, b.sa.proposal_sigma0);
  EXPECT_EQ(a.mpc.has_value(), b.mpc.has_value());
  if (a.mpc && b.mpc) {
    EXPECT_EQ(a.mpc->interval, b.mpc->interval);
    EXPECT_EQ(a.mpc->steps, b.mpc->steps);
    EXPECT_EQ(a.mpc->sa.iterations, b.mpc->sa.iterations);
  }
  EXPECT_EQ(a.outputs.dir, b.outputs.dir);
  EXPECT_EQ(a.outputs.grid, b.outputs.grid);
  EXPECT_EQ(a.outputs.plots, b.outputs.plots);
}

std::string field_of(const std::string & text)
{
  try {
    (void)parse_problem_string(text);
  } catch (const ValidationError & e) {
    return e.field();
  }
  return "<no error>";
}

std::string message_of(const std::string & text)
{
  try {
    (void)parse_problem_string(text);
  } catch (const ValidationError & e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(ProblemFile, MinimalFileUsesDefaults)
{
  const ProblemFile f = parse_problem_string(kMinimal);
  EXPECT_EQ(f.problem.name, "double integrator");
  EXPECT_EQ(f.problem.cost.R, Eigen::MatrixXd::Identity(1, 1));
  EXPECT_EQ(f.problem.cost.Q, Eigen::MatrixXd::Zero(2, 2));
  EXPECT_EQ(f.problem.state_set.H.rows(), 4);
  EXPECT_EQ(f.problem.control_box.upper(0), 3.0);
  EXPECT_EQ(f.problem.control_box.lower(0), -3.0);
  EXPECT_FALSE(f.problem.control_box_is_default);
  EXPECT_EQ(f.sa.iterations, SaConfig{}.iterations);
  EXPECT_FALSE(f.mpc.has_value());
  EXPECT_EQ(f.outputs.grid, 10000);
}

TEST(ProblemFile, MissingControlBoundFallsBackToTheDefault)
{
  std::string text = kMinimal;
  text.erase(text.find("[constraints.control]"));
  const ProblemFile f = parse_problem_string(text);
  EXPECT_TRUE(f.problem.control_box_is_default);
  EXPECT_EQ(f.problem.control_box.upper(0), kDefaultControlBound);
}

TEST(ProblemFile, WriterRoundTripsExactly)
{
  for (const auto & name : benchmarks::names()) {
    const ProblemFile f = benchmarks::by_name(name);
    const std::string text = write_problem_string(f);
    const ProblemFile back = parse_problem_string(text);
    expect_same(f, back);
    EXPECT_EQ(write_problem_string(back), text);
  }
  const ProblemFile f = parse_problem_string(kMinimal);
  expect_same(f, parse_problem_string(write_problem_string(f)));
}

TEST(ProblemFile, BundledBenchmarkFilesMatchTheBuiltins)
{
  const std::filesystem::path dir = std::filesystem::path(SIPOCP_SOURCE_DIR) / "bench";
  expect_same(parse_problem_file(dir / "bryson_denham.toml"), benchmarks::bryson_denham());
  expect_same(parse_problem_file(dir / "pendulum.toml"), benchmarks::pendulum());
}

TEST(ProblemFile, UnknownKeysAreRejectedWithTheirPath)
{
  std::string text = kMinimal;
  text.replace(text.find("N = 9"), 5, "N = 9\nNN = 3");
  EXPECT_EQ(field_of(text), "basis.NN");
  EXPECT_NE(message_of(text).find("line 13"), std::string::npos) << message_of(text);
  EXPECT_EQ(field_of("colour = 1\n" + kMinimal), "colour");
  EXPECT_EQ(field_of(kMinimal + "colour = 1\n"), "constraints.control.colour");
}

TEST(ProblemFile, SyntaxErrorsReportTheLine)
{
  std::string text = kMinimal;
  text.replace(text.find("horizon = 2.0"), 13, "horizon = = 2.0");
  const std::string msg = message_of(text);
  EXPECT_NE(msg.find("line 3"), std::string::npos) << msg;
}

TEST(ProblemFile, ShapeAndValueErrorsNameTheField)
{
  auto with = [](const std::string & from, const std::string & to) {
    std::string t = kMinimal;
    t.replace(t.find(from), from.size(), to);
    return t;
  };
  EXPECT_EQ(field_of(with("x0 = [1.0, 0.0]", "x0 = [1.0]")), "x0");
  EXPECT_EQ(field_of(with("A = [[0.0, 1.0], [0.0, 0.0]]", "A = [[0.0, 1.0], [0.0]]")), "system.A");
  EXPECT_EQ(field_of(with("horizon = 2.0", "horizon = -1.0")), "horizon");
  EXPECT_EQ(field_of(with("horizon = 2.0\n", "")), "horizon");
  EXPECT_EQ(field_of(with("kind = \"fourier\"", "kind = \"wavelet\"")), "basis.kind");
  EXPECT_EQ(field_of(with("bound = [3.0]", "bound = [3.0, 1.0]")), "constraints.control.bound");
  EXPECT_EQ(field_of(with("bound = [2.0, 1.5]", "bound = [2.0, \"wide\"]")), "constraints.state.bound");
  EXPECT_EQ(field_of(with("N = 9", "N = 9.5")), "basis.N");
  EXPECT_EQ(field_of(kMinimal + "\n[sa]\ncooling_factor = 1.5\n"), "sa.cooling_factor");
}

TEST(ProblemFile, GeneralPolytopesAndCustomBasis)
{
  std::string text = kMinimal;
  text.replace(text.find("bound = [2.0, 1.5]"), 18, "H = [[1.0, 1.0], [-1.0, 0.0]]\nh = [1.0, 2.0]");
  text.replace(text.find("kind = \"fourier\"\nN = 9"), 22, "kind = \"custom\"\nfunctions = [\"const\", \"poly:1\", \"sin:1\"]");
  const ProblemFile f = parse_problem_string(text);
  EXPECT_EQ(f.problem.state_set.H, (Eigen::MatrixXd(2, 2) << 1.0, 1.0, -1.0, 0.0).finished());
  EXPECT_EQ(f.problem.basis.kind(), BasisKind::Custom);
  EXPECT_EQ(f.problem.basis.size(), 3);
  expect_same(f, parse_problem_string(write_problem_string(f)));
}

TEST(ProblemFile, MissingFileIsAnInputError)
{
  EXPECT_THROW((void)parse_problem_file("/nonexistent/problem.toml"), ValidationError);
}

TEST(ProblemFile, NumbersAreWrittenLosslessly)
{
  EXPECT_EQ(format_g17(1.0), "1.0");
  EXPECT_EQ(format_g17(-0.0), "0.0");
  EXPECT_EQ(format_g17(0.1), "0.10000000000000001");
  EXPECT_EQ(format_g17(1e300), "1.0000000000000001e+300");
  EXPECT_EQ(std::stod(format_g17(1.0 / 3.0)), 1.0 / 3.0);
}

TEST(Benchmarks, UnknownNameNamesTheField)
{
  try {
    (void)benchmarks::by_name("cartpole");
    FAIL();
  } catch (const ValidationError & e) {
    EXPECT_EQ(e.field(), "benchmark");
  }
}

#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "bpladmm/engine.hpp"
#include "bpladmm/rpca.hpp"
#include "oracles.hpp"

using namespace bpladmm;

namespace {

// min 0 + 0 s.t. x - y = 0 with identity couplings; every subproblem is a
// strongly convex scalar quadratic with an explicit minimizer.
ProblemSpec scalar_toy() {
  ProblemSpec p;
  const BlockShape one{1, 1};
  p.x_shapes = {one};
  p.y_shape = one;
  p.constraint_shape = one;
  p.apply_A = [](std::size_t, const Block& x) -> Block { return x; };
  p.apply_A_transpose = [](std::size_t, const Block& v) -> Block { return v; };
  p.apply_B = [](const Block& y) -> Block { return -y; };
  p.apply_B_transpose = [](const Block& v) -> Block { return -v; };
  p.rhs = one.zero();
  p.eval_f = [](std::size_t, const Block&) { return 0.0; };
  p.eval_H = [](const Block&) { return 0.0; };
  p.grad_H = [](const Block& y) -> Block { return Block::Zero(y.rows(), y.cols()); };
  p.solve_x_block = [](const XBlockContext& c) -> Block {
    const double w = c.mu * *c.generator->quadratic_scale;
    return (-c.linear_term - *c.multiplier - c.rho * c.partial_residual + w * *c.current) /
           (c.rho + w);
  };
  // argmin <z, -y> + rho/2 |x - b - y|^2  =>  y = (x - b) + z / rho
  p.solve_y_block = [](const YBlockContext& c) -> Block {
    return c.x_residual + *c.multiplier / c.rho;
  };
  return p;
}

SolverParams toy_params(double rho) {
  ProblemConstants c;
  c.lambda = 1.0;
  return make_standard_params(rho, 1.0, c);
}

Block scalar(double v) { return Block::Constant(1, 1, v); }

}  // namespace

TEST(ParameterBounds, RpcaGate) {
  ProblemConstants c;
  c.ell_H = 1.0;
  c.lambda = 1.0;
  SolverParams p = make_standard_params(2.0 + 1e-10, 0.01, c);
  const auto b = validate_parameters(p);
  EXPECT_NEAR(b.rho_lower_bound, 2.0, 1e-12);
  EXPECT_EQ(b.mu_lower_bound, 0.0);
  p.rho = 2.0;
  EXPECT_THROW(validate_parameters(p), ParameterError);
}

TEST(ParameterBounds, DcOpfGate) {
  ProblemConstants c;
  c.ell_H = 900.0;
  c.lambda = 1.0;
  SolverParams p = make_standard_params(1800.0 + 1e-10, 0.01, c);
  EXPECT_NEAR(validate_parameters(p).rho_lower_bound, 1800.0, 1e-12);
  p.rho = 1800.0;
  EXPECT_THROW(validate_parameters(p), ParameterError);
}

TEST(ParameterBounds, MessagesNameTheBound) {
  ProblemConstants c;
  c.ell_H = 1.0;
  c.lambda = 1.0;
  SolverParams p = make_standard_params(1.0, 0.01, c);
  try {
    validate_parameters(p);
    FAIL() << "expected rejection";
  } catch (const ParameterError& e) {
    EXPECT_NE(std::string(e.what()).find("2 lambda"), std::string::npos);
  }
  c.lambda = 0.0;
  EXPECT_THROW(parameter_bounds(c, 0.0), ParameterError);
  c.lambda = 1.0;
  c.alpha = 0.0;
  EXPECT_THROW(parameter_bounds(c, 0.0), ParameterError);
}

TEST(ParameterBounds, MuBoundWithWeakConvexity) {
  ProblemConstants c;
  c.ell_P = 1.0;
  c.beta = 0.5;
  c.lambda = 1.0;
  SolverParams p = make_standard_params(10.0, 0.5, c);
  EXPECT_THROW(validate_parameters(p), ParameterError);  // mu = 1 <= 3
  p.mu_infimum = 3.5;
  p.mu_schedule = [](int) { return 3.5; };
  EXPECT_NEAR(validate_parameters(p).mu_lower_bound, 3.0, 1e-15);
}

TEST(SmallestEigenvalue, Examples) {
  EXPECT_NEAR(smallest_eigenvalue_BtB(-Eigen::MatrixXd::Identity(4, 4)), 1.0, 1e-14);
  EXPECT_NEAR(smallest_eigenvalue_BtB(Eigen::MatrixXd::Identity(3, 3)), 1.0, 1e-14);
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(3, 2);
  B(0, 0) = 2;
  B(1, 1) = 3;
  EXPECT_NEAR(smallest_eigenvalue_BtB(B), 4.0, 1e-12);
}

TEST(Merit, CouplingConstant) {
  ProblemConstants c;
  c.ell_H = 1.0;
  c.ell_psi = 1.0;
  c.lambda = 1.0;
  SolverParams p = make_standard_params(10.0, 1.0, c);
  EXPECT_EQ(merit_coefficient(p), 0.0);
  p.nu_supremum = 1.0;
  EXPECT_NEAR(merit_coefficient(p), 0.3, 1e-15);
}

TEST(Merit, EqualsAugmentedLagrangianWithoutDisplacement) {
  const ProblemSpec toy = scalar_toy();
  SolverParams p = toy_params(3.0);
  SolverState s = make_initial_state(toy, {scalar(0.7)}, scalar(-0.2), scalar(0.4));
  EXPECT_EQ(merit(toy, p, s), augmented_lagrangian(toy, p.rho, s.x, s.y, s.z));
}

TEST(Step, ScalarToyFirstIterate) {
  const ProblemSpec toy = scalar_toy();
  const SolverParams p = toy_params(3.0);
  SolverState s = make_initial_state(toy, {scalar(1.0)}, scalar(0.0), scalar(0.0));
  s = step(toy, p, std::move(s));
  EXPECT_NEAR(s.x[0](0, 0), 0.25, 1e-15);
  EXPECT_EQ(s.n, 1);
}

TEST(Step, MultiplierUpdateIsExact) {
  const ProblemSpec toy = scalar_toy();
  const SolverParams p = toy_params(3.0);
  SolverState s = make_initial_state(toy, {scalar(1.3)}, scalar(-0.4), scalar(0.2));
  const Block z0 = s.z;
  s = step(toy, p, std::move(s));
  const Block r = constraint_residual(toy, s.x, s.y);
  EXPECT_NEAR((s.z - z0 - p.rho * r).norm(), 0.0, 1e-15);
}

TEST(Step, FeasibleIterateLeavesMultiplierUnchanged) {
  ProblemSpec toy = scalar_toy();
  // The y oracle returns A x - b exactly, so the new residual vanishes.
  toy.solve_y_block = [](const YBlockContext& c) -> Block { return c.x_residual; };
  const SolverParams p = toy_params(3.0);
  SolverState s = make_initial_state(toy, {scalar(2.0)}, scalar(1.0), scalar(0.5));
  s = step(toy, p, std::move(s));
  EXPECT_EQ(s.z(0, 0), 0.5);
}

TEST(Step, GaussSeidelOrdering) {
  // Two scalar blocks x_0 + x_1 - y = 0. Block 0 jumps to 10; block 1 must
  // then see x_0 = 10 in its partial residual, computed against y_n.
  ProblemSpec p;
  const BlockShape one{1, 1};
  p.x_shapes = {one, one};
  p.y_shape = one;
  p.constraint_shape = one;
  p.apply_A = [](std::size_t, const Block& x) -> Block { return x; };
  p.apply_A_transpose = [](std::size_t, const Block& v) -> Block { return v; };
  p.apply_B = [](const Block& y) -> Block { return -y; };
  p.apply_B_transpose = [](const Block& v) -> Block { return -v; };
  p.rhs = one.zero();
  p.eval_f = [](std::size_t, const Block&) { return 0.0; };
  p.eval_H = [](const Block&) { return 0.0; };
  p.grad_H = [](const Block& y) -> Block { return 0 * y; };
  std::vector<double> seen_residual, seen_current;
  p.solve_x_block = [&](const XBlockContext& c) -> Block {
    seen_residual.push_back(c.partial_residual(0, 0));
    seen_current.push_back((*c.current)(0, 0));
    return c.block_index == 0 ? scalar(10.0) : *c.current;
  };
  p.solve_y_block = [](const YBlockContext& c) -> Block { return *c.current; };

  SolverState s = make_initial_state(p, {scalar(1.0), scalar(2.0)}, scalar(5.0), scalar(0.0));
  s = step(p, toy_params(3.0), std::move(s));
  ASSERT_EQ(seen_residual.size(), 2u);
  EXPECT_EQ(seen_residual[0], 2.0 - 5.0);   // block 1 still at x_n, y_n
  EXPECT_EQ(seen_residual[1], 10.0 - 5.0);  // block 0 already at x_{n+1}
  EXPECT_EQ(seen_current[1], 2.0);
}

TEST(Step, OracleFailureNamesTheBlock) {
  ProblemSpec toy = scalar_toy();
  toy.solve_x_block = [](const XBlockContext&) -> Block { throw std::runtime_error("singular"); };
  SolverState s = make_initial_state(toy, {scalar(1.0)}, scalar(0.0), scalar(0.0));
  try {
    step(toy, toy_params(3.0), s);
    FAIL() << "expected BlockOracleError";
  } catch (const BlockOracleError& e) {
    EXPECT_NE(std::string(e.what()).find("block 0"), std::string::npos) << e.what();
  }
  const SolveResult r = solve(toy, toy_params(3.0), s);
  EXPECT_EQ(r.status, SolveStatus::OracleFailure);
  EXPECT_EQ(r.final_state.x[0](0, 0), 1.0);  // state untouched by the failed sweep
}

TEST(Step, ShapeErrors) {
  const ProblemSpec toy = scalar_toy();
  EXPECT_THROW(make_initial_state(toy, {Block::Zero(2, 1)}, scalar(0), scalar(0)), DimensionError);
  EXPECT_THROW(make_initial_state(toy, {}, scalar(0), scalar(0)), DimensionError);
}

TEST(Solve, StationaryStartStopsImmediately) {
  const ProblemSpec toy = scalar_toy();
  const SolveResult r =
      solve(toy, toy_params(3.0), make_initial_state(toy, {scalar(0)}, scalar(0), scalar(0)));
  EXPECT_EQ(r.status, SolveStatus::Converged);
  EXPECT_LE(r.final_state.n, 2);
}

TEST(Solve, ToyConvergesWithMonotoneMerit) {
  const ProblemSpec toy = scalar_toy();
  std::vector<IterationReport> reports;
  const SolveResult r = solve(toy, toy_params(3.0),
                              make_initial_state(toy, {scalar(1)}, scalar(-2), scalar(0.5)),
                              [&](const IterationReport& rep) { reports.push_back(rep); });
  EXPECT_EQ(r.status, SolveStatus::Converged);
  ASSERT_FALSE(reports.empty());
  const double slack = 1e-8 * (1.0 + std::abs(reports.front().merit));
  for (std::size_t k = 1; k < reports.size(); ++k) {
    EXPECT_LE(reports[k].merit, reports[k - 1].merit + slack) << "at n = " << reports[k].n;
  }
  EXPECT_EQ(r.final_state.summary.merit_violations, 0u);
}

TEST(Stationarity, ExactSolutionGivesZeros) {
  const ProblemSpec toy = scalar_toy();
  const SolverParams p = toy_params(3.0);
  const auto s = make_initial_state(toy, {scalar(0.8)}, scalar(0.8), scalar(0.0));
  const auto rep = stationarity_report(toy, p, s);
  EXPECT_NEAR(rep.dual_y, 0.0, 1e-10);
  EXPECT_NEAR(rep.feasibility, 0.0, 1e-10);
  EXPECT_NEAR(rep.x_fixed_point, 0.0, 1e-10);
}

TEST(Stationarity, FeasibilityIsRecomputedResidual) {
  const ProblemSpec toy = scalar_toy();
  const auto s = make_initial_state(toy, {scalar(1.5)}, scalar(-0.25), scalar(0.3));
  EXPECT_NEAR(stationarity_report(toy, toy_params(3.0), s).feasibility, 1.75, 1e-15);
}

TEST(Trace, CsvRowsCarryFullPrecision) {
  IterationReport r;
  r.n = 3;
  r.merit = 1.0 / 3.0;
  std::ostringstream os;
  write_trace_header(os);
  write_trace_row(os, r);
  EXPECT_NE(os.str().find("0.33333333333333331"), std::string::npos) << os.str();
}

TEST(Adjoint, RpcaOperators) {
  std::mt19937_64 rng(2);
  const Eigen::MatrixXd M = test::gaussian(rng, 4, 3);
  const ProblemSpec p = rpca::make_problem(M, 0.5, 1.0);
  for (std::size_t i = 0; i < 2; ++i) {
    const Block x = test::gaussian(rng, 4, 3), v = test::gaussian(rng, 4, 3);
    EXPECT_NEAR(inner(p.apply_A(i, x), v), inner(x, p.apply_A_transpose(i, v)), 1e-12);
    EXPECT_NEAR(inner(p.apply_B(x), v), inner(x, p.apply_B_transpose(v)), 1e-12);
  }
}

TEST(Gradients, RpcaDataTermMatchesFiniteDifferences) {
  std::mt19937_64 rng(4);
  const Eigen::MatrixXd M = test::gaussian(rng, 3, 3);
  const ProblemSpec p = rpca::make_problem(M, 0.5, 1.7);
  const Block T = test::gaussian(rng, 3, 3);
  const Block g = p.grad_H(T);
  const double h = 1e-6;
  for (Eigen::Index k = 0; k < T.size(); ++k) {
    Block tp = T, tm = T;
    tp.data()[k] += h;
    tm.data()[k] -= h;
    EXPECT_NEAR(g.data()[k], (p.eval_H(tp) - p.eval_H(tm)) / (2 * h), 1e-6);
  }
}

#include "bpladmm/engine.hpp"

#include <cmath>
#include <iomanip>
#include <iostream>
#include <limits>
#include <sstream>

namespace bpladmm {

namespace {

const BregmanGenerator& x_generator(const SolverParams& params, std::size_t i) {
  if (params.x_generators.empty()) {
    throw ParameterError("no Bregman generator supplied for the x blocks");
  }
  return params.x_generators.size() == 1 ? params.x_generators.front() : params.x_generators.at(i);
}

std::vector<Block> zeros_like(const ProblemSpec& problem) {
  std::vector<Block> out;
  out.reserve(problem.num_blocks());
  for (const auto& s : problem.x_shapes) out.push_back(s.zero());
  return out;
}

std::vector<Block> checked_block_list(const ProblemSpec& problem, std::vector<Block> v,
                                      const char* what) {
  if (v.size() != problem.num_blocks()) {
    throw DimensionError(std::string(what) + ": wrong number of blocks");
  }
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!problem.x_shapes[i].matches(v[i])) {
      throw DimensionError(std::string(what) + ": block " + std::to_string(i) + " has wrong shape");
    }
  }
  return v;
}

struct XSweep {
  std::vector<Block> x;
  Block ax_minus_b;  // sum_i A_i x_{i,n+1} - b
};

// Gauss-Seidel pass over the x blocks; linearization data is frozen at x_n.
XSweep x_sweep(const ProblemSpec& problem, const SolverParams& params, const SolverState& state,
               double mu) {
  const std::size_t m = problem.num_blocks();
  std::vector<Block> lin =
      problem.grad_P ? checked_block_list(problem, problem.grad_P(state.x), "grad_P")
                     : zeros_like(problem);
  if (problem.subgrad_G) {
    const auto g = checked_block_list(problem, problem.subgrad_G(state.x), "subgrad_G");
    for (std::size_t i = 0; i < m; ++i) lin[i] -= g[i];
  }

  std::vector<Block> ax(m);
  Block total = problem.apply_B(state.y) - problem.rhs;
  for (std::size_t i = 0; i < m; ++i) {
    ax[i] = problem.apply_A(i, state.x[i]);
    total += ax[i];
  }

  XSweep out;
  out.x = state.x;
  for (std::size_t i = 0; i < m; ++i) {
    XBlockContext ctx;
    ctx.block_index = i;
    ctx.current = &state.x[i];
    ctx.linear_term = std::move(lin[i]);
    ctx.multiplier = &state.z;
    ctx.partial_residual = total - ax[i];
    ctx.rho = params.rho;
    ctx.mu = mu;
    ctx.generator = &x_generator(params, i);

    Block xi;
    try {
      xi = problem.solve_x_block(ctx);
    } catch (const BlockOracleError&) {
      throw;
    } catch (const std::exception& e) {
      throw BlockOracleError("x block " + std::to_string(i) + ": " + e.what());
    }
    if (!problem.x_shapes[i].matches(xi)) {
      throw BlockOracleError("x block " + std::to_string(i) + ": oracle returned wrong shape");
    }
    if (!xi.allFinite()) {
      throw BlockOracleError("x block " + std::to_string(i) + ": oracle returned non-finite values");
    }
    ax[i] = problem.apply_A(i, xi);
    total = std::move(ctx.partial_residual) + ax[i];
    out.x[i] = std::move(xi);
  }

  out.ax_minus_b = -problem.rhs;
  for (const auto& a : ax) out.ax_minus_b += a;
  return out;
}

double stacked_sq_norm(const std::vector<Block>& x) {
  double s = 0.0;
  for (const auto& b : x) s += b.squaredNorm();
  return s;
}

}  // namespace

SolverParams make_standard_params(double rho, double alpha, const ProblemConstants& constants) {
  SolverParams p;
  p.rho = rho;
  p.constants = constants;
  p.constants.alpha = alpha;
  p.x_generators = {squared_norm_generator(alpha)};
  return p;
}

ParameterBounds parameter_bounds(const ProblemConstants& c, double nu_supremum) {
  if (!(c.alpha > 0.0)) throw ParameterError("strong convexity modulus alpha must be > 0");
  if (!(c.lambda > 0.0)) {
    throw ParameterError("B lacks full column rank (lambda_min(B^T B) <= 0)");
  }
  if (c.ell_H < 0.0 || c.ell_P < 0.0 || c.beta < 0.0 || c.ell_psi < 0.0) {
    throw ParameterError("Lipschitz and weak-convexity constants must be >= 0");
  }
  if (nu_supremum < 0.0) throw ParameterError("nu must be >= 0");
  ParameterBounds b;
  b.mu_lower_bound = (c.ell_P + c.beta) / c.alpha;
  const double k = c.ell_H + 2.0 * nu_supremum * c.ell_psi;
  b.rho_lower_bound = (c.ell_H + std::sqrt(c.ell_H * c.ell_H + 8.0 * k * k)) / (2.0 * c.lambda);
  return b;
}

ParameterBounds validate_parameters(const SolverParams& params) {
  const auto b = parameter_bounds(params.constants, params.nu_supremum);
  std::ostringstream os;
  os << std::setprecision(17);
  if (!(params.mu_infimum > b.mu_lower_bound)) {
    os << "mu = " << params.mu_infimum << " must exceed (ell_P + beta)/alpha = " << b.mu_lower_bound;
    throw ParameterError(os.str());
  }
  if (!(params.rho > b.rho_lower_bound)) {
    os << "rho = " << params.rho
       << " must exceed (ell_H + sqrt(ell_H^2 + 8(ell_H + 2 nu ell_psi)^2))/(2 lambda) = "
       << b.rho_lower_bound;
    throw ParameterError(os.str());
  }
  for (const auto& g : params.x_generators) {
    if (g.strong_convexity + 1e-15 < params.constants.alpha) {
      throw ParameterError("an x-block Bregman generator is less than alpha-strongly convex");
    }
  }
  if (params.nu_supremum > 0.0) {
    if (!params.y_generator) throw ParameterError("nu > 0 requires a y Bregman generator");
    if (!params.y_generator->grad_lipschitz ||
        *params.y_generator->grad_lipschitz > params.constants.ell_psi + 1e-15) {
      throw ParameterError("y generator gradient Lipschitz constant exceeds ell_psi");
    }
  }
  if (params.max_iterations < 0) throw ParameterError("max_iterations must be >= 0");
  if (!(params.stop.tolerance > 0.0)) throw ParameterError("stop tolerance must be > 0");
  return b;
}

double smallest_eigenvalue_BtB(const Eigen::MatrixXd& B) {
  if (!B.allFinite()) throw std::invalid_argument("smallest_eigenvalue_BtB: non-finite B");
  if (B.cols() == 0) return 0.0;
  const Eigen::MatrixXd BtB = B.transpose() * B;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(BtB, Eigen::EigenvaluesOnly);
  return std::max(eig.eigenvalues()(0), 0.0);
}

SolverState make_initial_state(const ProblemSpec& problem, std::vector<Block> x, Block y, Block z) {
  SolverState s;
  s.x = std::move(x);
  s.y = std::move(y);
  s.z = std::move(z);
  s.y_prev = s.y;
  check_state(problem, s);
  return s;
}

void check_state(const ProblemSpec& problem, const SolverState& state) {
  checked_block_list(problem, state.x, "state.x");
  if (!problem.y_shape.matches(state.y) || !problem.y_shape.matches(state.y_prev)) {
    throw DimensionError("state.y has wrong shape");
  }
  if (!problem.constraint_shape.matches(state.z) || !problem.constraint_shape.matches(problem.rhs)) {
    throw DimensionError("state.z or rhs has wrong shape");
  }
}

double merit_coefficient(const SolverParams& params) {
  const auto& c = params.constants;
  const double nu = params.nu_supremum;
  if (nu == 0.0) return 0.0;
  return (c.ell_H + 2.0 * nu * c.ell_psi) * nu * c.ell_psi / (c.lambda * params.rho);
}

DescentWeights descent_weights(const SolverParams& params) {
  const auto& c = params.constants;
  const double lr = c.lambda * params.rho;
  const double k = c.ell_H + 2.0 * params.nu_supremum * c.ell_psi;
  return {(params.mu_infimum * c.alpha - c.ell_P - c.beta) / 2.0,
          lr / 2.0 - k * k / lr - c.ell_H / 2.0};
}

Block constraint_residual(const ProblemSpec& problem, const std::vector<Block>& x, const Block& y) {
  Block r = problem.apply_B(y) - problem.rhs;
  for (std::size_t i = 0; i < x.size(); ++i) r += problem.apply_A(i, x[i]);
  return r;
}

double objective_value(const ProblemSpec& problem, const std::vector<Block>& x, const Block& y) {
  double F = problem.eval_H(y);
  for (std::size_t i = 0; i < x.size(); ++i) F += problem.eval_f(i, x[i]);
  if (problem.eval_P) F += problem.eval_P(x);
  if (problem.eval_G) F -= problem.eval_G(x);
  return F;
}

double augmented_lagrangian(const ProblemSpec& problem, double rho, const std::vector<Block>& x,
                            const Block& y, const Block& z) {
  const Block r = constraint_residual(problem, x, y);
  return objective_value(problem, x, y) + inner(z, r) + 0.5 * rho * r.squaredNorm();
}

double merit(const ProblemSpec& problem, const SolverParams& params, const SolverState& state) {
  const double c = merit_coefficient(params);
  double L = augmented_lagrangian(problem, params.rho, state.x, state.y, state.z);
  if (c != 0.0) L += c * (state.y - state.y_prev).squaredNorm();
  return L;
}

namespace {

// State is only modified after every oracle in the sweep has succeeded.
void advance(const ProblemSpec& problem, const SolverParams& params, SolverState& state,
             const ReportSink& sink) {
  const double mu = params.mu_schedule(state.n);
  const double nu = params.nu_schedule(state.n);

  XSweep sweep = x_sweep(problem, params, state, mu);

  YBlockContext yctx;
  yctx.current = &state.y;
  yctx.multiplier = &state.z;
  yctx.x_residual = sweep.ax_minus_b;
  yctx.rho = params.rho;
  yctx.nu = nu;
  yctx.generator = params.y_generator ? &*params.y_generator : nullptr;
  Block y_new;
  try {
    y_new = problem.solve_y_block(yctx);
  } catch (const BlockOracleError&) {
    throw;
  } catch (const std::exception& e) {
    throw BlockOracleError(std::string("y block: ") + e.what());
  }
  if (!problem.y_shape.matches(y_new) || !y_new.allFinite()) {
    throw BlockOracleError("y block: oracle returned a wrong-shaped or non-finite value");
  }

  const Block r = sweep.ax_minus_b + problem.apply_B(y_new);
  Block z_new = state.z + params.rho * r;

  IterationReport rep;
  rep.n = state.n + 1;
  double dx = 0.0;
  for (std::size_t i = 0; i < sweep.x.size(); ++i) dx += (sweep.x[i] - state.x[i]).squaredNorm();
  rep.step_x = std::sqrt(dx);
  rep.step_y = (y_new - state.y).norm();
  rep.step_z = (z_new - state.z).norm();
  rep.objective = objective_value(problem, sweep.x, y_new);
  rep.feasibility = r.norm();
  rep.augmented_lagrangian =
      rep.objective + inner(z_new, r) + 0.5 * params.rho * r.squaredNorm();
  const double c = merit_coefficient(params);
  rep.merit = rep.augmented_lagrangian + c * rep.step_y * rep.step_y;

  auto& sum = state.summary;
  if (sum.last_merit) {
    const double inc = rep.merit - *sum.last_merit;
    const double slack = params.merit_slack * (1.0 + std::abs(*sum.first_merit));
    sum.max_merit_increase = std::max(sum.max_merit_increase, inc);
    if (inc > slack) {
      if (sum.merit_violations == 0) {
        std::clog << "warning: merit increased by " << inc << " at iteration " << rep.n
                  << " (constants may be underestimated)\n";
      }
      ++sum.merit_violations;
    }
    const auto w = descent_weights(params);
    const double shortfall =
        w.delta_x * dx + w.delta_y * rep.step_y * rep.step_y - (*sum.last_merit - rep.merit);
    sum.max_descent_shortfall = std::max(sum.max_descent_shortfall, shortfall);
  } else {
    sum.first_merit = rep.merit;
  }
  sum.last_merit = rep.merit;
  sum.sum_step_x_sq += dx;
  sum.sum_step_y_sq += rep.step_y * rep.step_y;
  sum.sum_step_z_sq += rep.step_z * rep.step_z;
  ++sum.total_reports;

  if (params.history_window > 0) {
    state.history.push_back(rep);
    while (state.history.size() > params.history_window) {
      state.history.pop_front();
      ++sum.dropped_reports;
    }
  } else {
    ++sum.dropped_reports;
  }
  if (sink) sink(rep);

  state.x = std::move(sweep.x);
  state.y_prev = std::move(state.y);
  state.y = std::move(y_new);
  state.z = std::move(z_new);
  ++state.n;
}

}  // namespace

SolverState step(const ProblemSpec& problem, const SolverParams& params, SolverState state,
                 const ReportSink& sink) {
  check_state(problem, state);
  advance(problem, params, state, sink);
  return state;
}

const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Converged: return "converged";
    case SolveStatus::MaxIterations: return "max-iterations";
    case SolveStatus::OracleFailure: return "oracle-failure";
  }
  return "unknown";
}

SolveResult solve(const ProblemSpec& problem, const SolverParams& params, SolverState init,
                  const ReportSink& sink) {
  validate_parameters(params);
  check_state(problem, init);
  SolveResult res;
  res.final_state = std::move(init);
  res.status = SolveStatus::MaxIterations;
  const auto& stop = params.stop;

  for (int k = 0; k < params.max_iterations; ++k) {
    const SolverState& cur = res.final_state;
    double base = stacked_sq_norm(cur.x) + cur.y.squaredNorm();
    if (stop.include_multiplier) base += cur.z.squaredNorm();
    std::vector<Block> x_old = cur.x;
    Block y_old = cur.y;
    Block z_old = cur.z;

    try {
      advance(problem, params, res.final_state, sink);
    } catch (const BlockOracleError& e) {
      res.status = SolveStatus::OracleFailure;
      res.message = e.what();
      return res;
    }

    const SolverState& nxt = res.final_state;
    double delta = 0.0;
    for (std::size_t i = 0; i < nxt.x.size(); ++i) delta += (nxt.x[i] - x_old[i]).squaredNorm();
    delta += (nxt.y - y_old).squaredNorm();
    if (stop.include_multiplier) delta += (nxt.z - z_old).squaredNorm();
    delta = std::sqrt(delta);
    base = std::sqrt(base);

    bool done = false;
    if (stop.rule == StopRule::RelativeChangeShifted) {
      res.last_relative_change = delta / (base + 1.0);
      done = res.last_relative_change <= stop.tolerance;
    } else {
      res.last_relative_change =
          base > 0.0 ? delta / base : (delta > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
      done = res.last_relative_change < stop.tolerance;
    }
    if (done) {
      res.status = SolveStatus::Converged;
      break;
    }
  }
  if (res.final_state.summary.merit_violations > 0) {
    res.message = "merit increased beyond slack " +
                  std::to_string(res.final_state.summary.merit_violations) + " time(s)";
  }
  return res;
}

StationarityReport stationarity_report(const ProblemSpec& problem, const SolverParams& params,
                                       const SolverState& state) {
  check_state(problem, state);
  StationarityReport out;
  out.dual_y = (problem.grad_H(state.y) + problem.apply_B_transpose(state.z)).norm();
  out.feasibility = constraint_residual(problem, state.x, state.y).norm();
  const XSweep sweep = x_sweep(problem, params, state, params.mu_schedule(state.n));
  double d = 0.0;
  for (std::size_t i = 0; i < state.x.size(); ++i) d += (sweep.x[i] - state.x[i]).squaredNorm();
  out.x_fixed_point = std::sqrt(d);
  return out;
}

void write_trace_header(std::ostream& os) {
  os << "n,L_rho,merit,feasibility,objective,step_x,step_y,step_z\n";
}

void write_trace_row(std::ostream& os, const IterationReport& r) {
  const auto old = os.precision(17);
  os << r.n << ',' << r.augmented_lagrangian << ',' << r.merit << ',' << r.feasibility << ','
     << r.objective << ',' << r.step_x << ',' << r.step_y << ',' << r.step_z << '\n';
  os.precision(old);
}

}  // namespace bpladmm

#pragma once

// Generic multi-block Bregman proximal linearized ADMM.
//
// Problem template:
//   min  sum_i f_i(x_i) + H(y) + P(x) - G(x)   s.t.  sum_i A_i x_i + B y = b
//
// with f_i proper lsc, H and P smooth, G weakly convex. One sweep linearizes
// P and G at x_n, updates the x blocks Gauss-Seidel with a Bregman proximal
// term, then y, then ascends the multiplier z.

#include <cstddef>
#include <deque>
#include <functional>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "bpladmm/spaces.hpp"

namespace bpladmm {

struct XBlockContext {
  std::size_t block_index = 0;
  const Block* current = nullptr;          // x_{i,n}
  Block linear_term;                       // grad_i P(x_n) - g_{i,n}
  const Block* multiplier = nullptr;       // z_n
  Block partial_residual;                  // sum_{k != i} A_k x_k + B y_n - b (Gauss-Seidel)
  double rho = 0.0;
  double mu = 0.0;
  const BregmanGenerator* generator = nullptr;
};

struct YBlockContext {
  const Block* current = nullptr;          // y_n
  const Block* multiplier = nullptr;       // z_n
  Block x_residual;                        // A x_{n+1} - b
  double rho = 0.0;
  double nu = 0.0;
  const BregmanGenerator* generator = nullptr;
};

/// Thrown by a block oracle that cannot produce a minimizer.
class BlockOracleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ProblemSpec {
  std::vector<BlockShape> x_shapes;
  BlockShape y_shape;
  BlockShape constraint_shape;

  std::function<Block(std::size_t, const Block&)> apply_A;
  std::function<Block(std::size_t, const Block&)> apply_A_transpose;
  std::function<Block(const Block&)> apply_B;
  std::function<Block(const Block&)> apply_B_transpose;
  Block rhs;

  std::function<double(std::size_t, const Block&)> eval_f;
  std::function<double(const Block&)> eval_H;
  std::function<Block(const Block&)> grad_H;
  // P and G may be left empty, meaning identically zero.
  std::function<double(const std::vector<Block>&)> eval_P;
  std::function<std::vector<Block>(const std::vector<Block>&)> grad_P;
  std::function<double(const std::vector<Block>&)> eval_G;
  std::function<std::vector<Block>(const std::vector<Block>&)> subgrad_G;

  std::function<Block(const XBlockContext&)> solve_x_block;
  std::function<Block(const YBlockContext&)> solve_y_block;

  std::size_t num_blocks() const { return x_shapes.size(); }
};

enum class StopRule {
  // ||Delta|| / (||iterate|| + 1) <= tol
  RelativeChangeShifted,
  // ||Delta|| / ||iterate|| < tol
  RelativeChange,
};

struct StopCriterion {
  StopRule rule = StopRule::RelativeChangeShifted;
  double tolerance = 1e-6;
  bool include_multiplier = true;  // whether z enters the stacked iterate
};

struct ProblemConstants {
  double ell_H = 0.0;
  double ell_P = 0.0;
  double beta = 0.0;     // weak-convexity modulus of G
  double alpha = 0.0;    // common strong-convexity modulus of the phi_i
  double ell_psi = 0.0;  // Lipschitz constant of grad psi
  double lambda = 0.0;   // lambda_min(B^T B)
  // Only needed by the full-sequence convergence theory; never used by the iteration.
  std::optional<double> ell_G;
  std::optional<double> ell_phi;
};

struct SolverParams {
  double rho = 1.0;
  std::function<double(int)> mu_schedule = [](int) { return 1.0; };
  double mu_infimum = 1.0;
  std::function<double(int)> nu_schedule = [](int) { return 0.0; };
  double nu_supremum = 0.0;
  ProblemConstants constants;
  std::vector<BregmanGenerator> x_generators;  // one per block, or one shared
  std::optional<BregmanGenerator> y_generator;
  int max_iterations = 4000;
  StopCriterion stop;
  std::size_t history_window = 5000;
  double merit_slack = 1e-8;  // relative to 1 + |L_1|
};

/// Constant-schedule parameters with phi_i = (alpha/2)||.||^2 and nu = 0.
SolverParams make_standard_params(double rho, double alpha, const ProblemConstants& constants);

struct ParameterBounds {
  double mu_lower_bound = 0.0;
  double rho_lower_bound = 0.0;
};

class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Strict lower bounds on mu and rho; throws ParameterError naming a violated bound.
ParameterBounds parameter_bounds(const ProblemConstants& c, double nu_supremum);
ParameterBounds validate_parameters(const SolverParams& params);

/// lambda_min(B^T B) via a symmetric eigen-decomposition.
double smallest_eigenvalue_BtB(const Eigen::MatrixXd& B);

struct IterationReport {
  int n = 0;
  double augmented_lagrangian = 0.0;
  double merit = 0.0;
  double feasibility = 0.0;
  double objective = 0.0;
  double step_x = 0.0;
  double step_y = 0.0;
  double step_z = 0.0;
};

struct HistorySummary {
  std::size_t total_reports = 0;
  std::size_t dropped_reports = 0;
  std::optional<double> first_merit;  // L_1
  std::optional<double> last_merit;
  double max_merit_increase = 0.0;    // max_n (L_{n+1} - L_n)
  std::size_t merit_violations = 0;   // increases beyond the slack
  double sum_step_x_sq = 0.0;
  double sum_step_y_sq = 0.0;
  double sum_step_z_sq = 0.0;
  double max_descent_shortfall = 0.0; // max over n of (delta-weighted steps) - (L_n - L_{n+1})
};

struct SolverState {
  std::vector<Block> x;
  Block y;
  Block z;
  Block y_prev;
  int n = 0;
  std::deque<IterationReport> history;
  HistorySummary summary;
};

SolverState make_initial_state(const ProblemSpec& problem, std::vector<Block> x, Block y, Block z);

/// Throws DimensionError when any block disagrees with the problem's shapes.
void check_state(const ProblemSpec& problem, const SolverState& state);

/// Coupling constant c of the merit function.
double merit_coefficient(const SolverParams& params);

/// Descent weights delta_x, delta_y of the quantified decrease.
struct DescentWeights {
  double delta_x = 0.0;
  double delta_y = 0.0;
};
DescentWeights descent_weights(const SolverParams& params);

double augmented_lagrangian(const ProblemSpec& problem, double rho, const std::vector<Block>& x,
                            const Block& y, const Block& z);
double objective_value(const ProblemSpec& problem, const std::vector<Block>& x, const Block& y);
Block constraint_residual(const ProblemSpec& problem, const std::vector<Block>& x, const Block& y);

/// L_rho(x_n, y_n, z_n) + c ||y_n - y_{n-1}||^2.
double merit(const ProblemSpec& problem, const SolverParams& params, const SolverState& state);

using ReportSink = std::function<void(const IterationReport&)>;

/// One full sweep. Throws BlockOracleError naming the failing block.
SolverState step(const ProblemSpec& problem, const SolverParams& params, SolverState state,
                 const ReportSink& sink = {});

enum class SolveStatus { Converged, MaxIterations, OracleFailure };
const char* to_string(SolveStatus s);

struct SolveResult {
  SolverState final_state;
  SolveStatus status = SolveStatus::MaxIterations;
  std::string message;
  double last_relative_change = 0.0;
};

SolveResult solve(const ProblemSpec& problem, const SolverParams& params, SolverState init,
                  const ReportSink& sink = {});

struct StationarityReport {
  double dual_y = 0.0;
  double feasibility = 0.0;
  double x_fixed_point = 0.0;
};

/// Residuals of the first-order conditions; the x inclusion is measured by
/// the displacement of one more x sweep.
StationarityReport stationarity_report(const ProblemSpec& problem, const SolverParams& params,
                                       const SolverState& state);

void write_trace_header(std::ostream& os);
void write_trace_row(std::ostream& os, const IterationReport& r);

}  // namespace bpladmm

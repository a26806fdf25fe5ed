#pragma once

// DC optimal power flow with PV placement.
//
// Per bus i the block is x_i = [P_pv, P_g, theta, u]. All inequality rows are
// written as sum_i A_i x_i + y = b, and y >= 0 is enforced by the penalty
// H(y) = (eta/2) dist^2(y, R^p_+). The binary u is relaxed to [0, 1] with the
// concave term -G(x) = -gamma sum_i (u_i^2 - u_i).

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Cholesky>

#include "bpladmm/engine.hpp"

namespace bpladmm::dcopf {

inline constexpr Eigen::Index kPv = 0;
inline constexpr Eigen::Index kGen = 1;
inline constexpr Eigen::Index kTheta = 2;
inline constexpr Eigen::Index kU = 3;
inline constexpr Eigen::Index kBlockDim = 4;

struct Bus {
  double demand = 0.0;        // D_i, pu
  double gen_a = 0.0;         // quadratic cost coefficient
  double gen_b = 0.0;
  double gen_c = 0.0;
  double gen_capacity = 0.0;  // pu, 0 when no generator
};

struct Line {
  std::size_t from = 0;  // zero-based bus indices
  std::size_t to = 0;
  double susceptance = 0.0;  // pu
};

struct DcOpfCase {
  std::string name;
  std::vector<Bus> buses;
  std::vector<Line> lines;  // undirected
  double pv_cost = 1.0;      // C
  double pv_capacity = 0.8;  // pu
  double line_limit = 3.0;   // pu
  double gamma = 80.0;
  double eta = 900.0;
  std::optional<double> rho;  // default 2 eta + 1e-10

  std::size_t num_buses() const { return buses.size(); }
  double default_rho() const;
};

/// Neighbor lists with merged parallel lines: adjacency[i] = {(j, b_ij)} sorted by j.
std::vector<std::vector<std::pair<std::size_t, double>>> adjacency(const DcOpfCase& c);

/// Throws std::invalid_argument on self-loops, bad indices, negative values.
void validate_case(const DcOpfCase& c);

struct DcOpfProblem {
  std::vector<Eigen::MatrixXd> A;  // p x 4 per bus
  Eigen::VectorXd b;
  std::vector<Eigen::Matrix4d> Q;
  std::vector<Eigen::Vector4d> q;
  std::vector<double> c;
  Eigen::Index p = 0;
  std::size_t num_lines_directed = 0;  // sum_i |M_i|
};

/// Row layout: bus balance (N), PV penetration (1), thermal per directed line,
/// PV linking (2N), generator bounds (2N), u box (2N), theta box (2N).
DcOpfProblem build_problem(const DcOpfCase& c);

/// Row-count formula 9|N| + sum_i |M_i| + 1.
Eigen::Index constraint_count(const DcOpfCase& c);

/// Gradient of G(x) = gamma sum (u_i^2 - u_i): only the u entries are nonzero.
std::vector<Block> g_gradient(const std::vector<Block>& x, double gamma);
double g_value(const std::vector<Block>& x, double gamma);

/// Cached factorizations of Q_i + rho A_i^T A_i + w I for one (rho, w).
class XBlockSolver {
 public:
  XBlockSolver(const DcOpfProblem& prob, double rho, double prox_weight);
  Eigen::Vector4d solve(std::size_t i, const Eigen::Vector4d& rhs) const;
  double rho() const { return rho_; }
  double prox_weight() const { return weight_; }

 private:
  std::vector<Eigen::LDLT<Eigen::Matrix4d>> factors_;
  double rho_;
  double weight_;
};

/// Closed-form x_i update given the engine context.
Block x_block_update(std::size_t i, const XBlockContext& ctx, const DcOpfProblem& prob,
                     const XBlockSolver* cached = nullptr);

/// y_j = max(0, v_j) + rho/(eta + rho) min(0, v_j), v = b - A x - z/rho.
Block y_block_update(const YBlockContext& ctx, double eta);

ProblemSpec make_problem(const DcOpfProblem& prob, const DcOpfCase& c, double rho, double alpha);

SolverParams make_params(const DcOpfCase& c, double alpha = 1e-2, double tolerance = 1e-5,
                         int max_iterations = 4000);

enum class InitKind { LowerBound, Random };

struct DcOpfInit {
  InitKind kind = InitKind::LowerBound;
  std::uint64_t seed = 0;
};

/// x at its lower bounds (0) or uniform in the variable boxes, y = max(b - Ax, 0), z = 0.
SolverState initial_state(const ProblemSpec& spec, const DcOpfProblem& prob, const DcOpfCase& c,
                          const DcOpfInit& init);

struct BusResult {
  double p_pv = 0.0;
  double p_gen = 0.0;
  double theta = 0.0;
  double u = 0.0;
};

struct DcOpfSolution {
  std::vector<BusResult> buses;
  Eigen::VectorXd y;
  Eigen::VectorXd z;
  double objective_opf1 = 0.0;       // rounded u
  double objective_opf1_raw = 0.0;   // raw u
  double objective_relaxed = 0.0;    // relaxed model value (with penalties)
  double binary_violation = 0.0;     // sum (u - u^2)
  double feasibility_residual = 0.0; // ||Ax + y - b||
  double max_violation = 0.0;        // max_j (Ax - b)_j^+
  double min_slack = 0.0;            // min_j y_j
  int iterations = 0;
  double wall_time = 0.0;
  SolveStatus status = SolveStatus::MaxIterations;
  std::string message;
  HistorySummary summary;
  std::vector<IterationReport> trace;
};

struct DcOpfRunOptions {
  double alpha = 1e-2;
  double tolerance = 1e-5;
  int max_iterations = 4000;
  DcOpfInit init;
  bool record_trace = false;
};

DcOpfSolution solve_dcopf(const DcOpfCase& c, const DcOpfRunOptions& opts = {});

/// u rounded to the nearest of {0, 1}; 0.5 rounds up.
double round_u(double u);

/// OPF cost (PV + generation) of a solution using the given u values.
double opf1_objective(const DcOpfCase& c, const std::vector<BusResult>& buses, bool rounded);

struct FrozenCheck {
  bool feasible = false;
  double max_violation = 0.0;
  std::vector<double> u;
  DcOpfSolution resolve;
};

/// Pins u to its rounded values, re-solves the convex remainder (gamma = 0)
/// and reports whether the power flow satisfies every row within tol.
FrozenCheck frozen_u_check(const DcOpfCase& c, const DcOpfSolution& sol, double tol = 1e-3,
                           const DcOpfRunOptions& opts = {});

/// Built-in two-bus case with the layout of the worked construction example.
DcOpfCase two_bus_fixture();

/// Radial-plus-chords grid with reproducible random demands and susceptances.
DcOpfCase synthetic_case(std::size_t buses, std::uint64_t seed);

/// Plain-text case format (see README):
///   pv_cost|pv_capacity|line_limit|gamma|eta|rho <value>
///   bus <id> <demand> [<a> <b> <c> <capacity>]
///   line <from> <to> <susceptance>
DcOpfCase parse_case_text(const std::string& text);
DcOpfCase load_case_file(const std::string& path);

void write_solution_csv(std::ostream& os, const DcOpfSolution& sol);
std::string solution_json(const DcOpfCase& c, const DcOpfSolution& sol);
std::string case_json(const DcOpfCase& c);

}  // namespace bpladmm::dcopf

#include "bpladmm/dcopf.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <memory>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace bpladmm::dcopf {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

Eigen::Vector4d as_vec4(const Block& b) {
  if (b.rows() != kBlockDim || b.cols() != 1) throw DimensionError("dcopf: block must be 4x1");
  return Eigen::Vector4d(b.col(0));
}

Eigen::VectorXd apply_all(const DcOpfProblem& prob, const std::vector<Block>& x) {
  Eigen::VectorXd ax = Eigen::VectorXd::Zero(prob.p);
  for (std::size_t i = 0; i < x.size(); ++i) ax += prob.A[i] * x[i];
  return ax;
}

DcOpfSolution solve_built(const DcOpfCase& c, const DcOpfProblem& prob, const DcOpfRunOptions& opts) {
  const double rho = c.rho.value_or(c.default_rho());
  const ProblemSpec spec = make_problem(prob, c, rho, opts.alpha);
  SolverParams params = make_params(c, opts.alpha, opts.tolerance, opts.max_iterations);
  SolverState init = initial_state(spec, prob, c, opts.init);

  DcOpfSolution sol;
  ReportSink sink;
  if (opts.record_trace) sink = [&sol](const IterationReport& r) { sol.trace.push_back(r); };

  const auto t0 = std::chrono::steady_clock::now();
  SolveResult res = solve(spec, params, std::move(init), sink);
  sol.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  const SolverState& st = res.final_state;
  sol.status = res.status;
  sol.message = res.message;
  sol.iterations = st.n;
  sol.summary = st.summary;
  sol.y = st.y.col(0);
  sol.z = st.z.col(0);
  sol.buses.resize(c.num_buses());
  for (std::size_t i = 0; i < c.num_buses(); ++i) {
    const auto& xi = st.x[i];
    sol.buses[i] = {xi(kPv, 0), xi(kGen, 0), xi(kTheta, 0), xi(kU, 0)};
  }
  const Eigen::VectorXd ax = apply_all(prob, st.x);
  sol.feasibility_residual = (ax + sol.y - prob.b).norm();
  sol.max_violation = std::max(0.0, (ax - prob.b).maxCoeff());
  sol.min_slack = sol.y.size() ? sol.y.minCoeff() : 0.0;
  sol.objective_opf1 = opf1_objective(c, sol.buses, true);
  sol.objective_opf1_raw = opf1_objective(c, sol.buses, false);
  sol.objective_relaxed = objective_value(spec, st.x, st.y);
  for (const auto& r : sol.buses) sol.binary_violation += r.u - r.u * r.u;
  return sol;
}

}  // namespace

double DcOpfCase::default_rho() const { return 2.0 * eta + 1e-10; }

void validate_case(const DcOpfCase& c) {
  if (c.buses.empty()) throw std::invalid_argument("dcopf case: no buses");
  const std::size_t n = c.num_buses();
  for (std::size_t i = 0; i < n; ++i) {
    const auto& b = c.buses[i];
    if (!std::isfinite(b.demand)) {
      throw std::invalid_argument("dcopf case: demand at bus " + std::to_string(i + 1) + " is not finite");
    }
    if (b.gen_capacity < 0.0) {
      throw std::invalid_argument("dcopf case: negative generator capacity at bus " + std::to_string(i + 1));
    }
    if (b.gen_a < 0.0) {
      throw std::invalid_argument("dcopf case: negative quadratic cost at bus " + std::to_string(i + 1));
    }
  }
  for (const auto& l : c.lines) {
    if (l.from >= n || l.to >= n) throw std::invalid_argument("dcopf case: line references unknown bus");
    if (l.from == l.to) throw std::invalid_argument("dcopf case: self-loop line at bus " + std::to_string(l.from + 1));
    if (!(l.susceptance > 0.0) || !std::isfinite(l.susceptance)) {
      throw std::invalid_argument("dcopf case: line susceptance must be positive and finite");
    }
  }
  if (c.pv_capacity < 0.0 || c.line_limit < 0.0) {
    throw std::invalid_argument("dcopf case: negative PV capacity or line limit");
  }
  if (!(c.eta > 0.0)) throw std::invalid_argument("dcopf case: eta must be > 0");
  if (c.gamma < 0.0) throw std::invalid_argument("dcopf case: gamma must be >= 0");
}

std::vector<std::vector<std::pair<std::size_t, double>>> adjacency(const DcOpfCase& c) {
  std::vector<std::map<std::size_t, double>> merged(c.num_buses());
  for (const auto& l : c.lines) {
    merged.at(l.from)[l.to] += l.susceptance;
    merged.at(l.to)[l.from] += l.susceptance;
  }
  std::vector<std::vector<std::pair<std::size_t, double>>> adj(c.num_buses());
  for (std::size_t i = 0; i < merged.size(); ++i) adj[i].assign(merged[i].begin(), merged[i].end());
  return adj;
}

Eigen::Index constraint_count(const DcOpfCase& c) {
  std::size_t directed = 0;
  for (const auto& nb : adjacency(c)) directed += nb.size();
  return static_cast<Eigen::Index>(9 * c.num_buses() + directed + 1);
}

DcOpfProblem build_problem(const DcOpfCase& c) {
  validate_case(c);
  const auto adj = adjacency(c);
  const std::size_t n = c.num_buses();

  DcOpfProblem prob;
  prob.p = constraint_count(c);
  for (const auto& nb : adj) prob.num_lines_directed += nb.size();
  prob.A.assign(n, Eigen::MatrixXd::Zero(prob.p, kBlockDim));
  prob.b = Eigen::VectorXd::Zero(prob.p);

  Eigen::Index row = 0;
  // Power balance: -P_pv - P_g + sum_j b_ij (theta_i - theta_j) <= -D_i.
  for (std::size_t i = 0; i < n; ++i, ++row) {
    prob.A[i](row, kPv) = -1.0;
    prob.A[i](row, kGen) = -1.0;
    for (const auto& [j, bij] : adj[i]) {
      prob.A[i](row, kTheta) += bij;
      prob.A[j](row, kTheta) -= bij;
    }
    prob.b(row) = -c.buses[i].demand;
  }
  // PV penetration: -sum_i P_pv_i <= -(1/2) sum_i D_i.
  double total_demand = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    prob.A[i](row, kPv) = -1.0;
    total_demand += c.buses[i].demand;
  }
  prob.b(row++) = -0.5 * total_demand;
  // Thermal limit per directed line: b_ij (theta_i - theta_j) <= P_bar.
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto& [j, bij] : adj[i]) {
      prob.A[i](row, kTheta) = bij;
      prob.A[j](row, kTheta) = -bij;
      prob.b(row++) = c.line_limit;
    }
  }
  // PV linking: P_pv - u P_pv_bar <= 0 and -P_pv <= 0.
  for (std::size_t i = 0; i < n; ++i) {
    prob.A[i](row, kPv) = 1.0;
    prob.A[i](row++, kU) = -c.pv_capacity;
    prob.A[i](row++, kPv) = -1.0;
  }
  // Generator bounds.
  for (std::size_t i = 0; i < n; ++i) {
    prob.A[i](row, kGen) = 1.0;
    prob.b(row++) = c.buses[i].gen_capacity;
    prob.A[i](row++, kGen) = -1.0;
  }
  // u in [0, 1].
  for (std::size_t i = 0; i < n; ++i) {
    prob.A[i](row, kU) = 1.0;
    prob.b(row++) = 1.0;
    prob.A[i](row++, kU) = -1.0;
  }
  // theta in [0, 2 pi].
  for (std::size_t i = 0; i < n; ++i) {
    prob.A[i](row, kTheta) = 1.0;
    prob.b(row++) = kTwoPi;
    prob.A[i](row++, kTheta) = -1.0;
  }
  if (row != prob.p) throw std::logic_error("dcopf: constraint row count mismatch");

  prob.Q.resize(n);
  prob.q.resize(n);
  prob.c.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& bus = c.buses[i];
    prob.Q[i].setZero();
    prob.Q[i](kGen, kGen) = 2.0 * bus.gen_a;
    prob.q[i] << 0.0, bus.gen_b, 0.0, c.pv_cost;
    prob.c[i] = bus.gen_c;
  }
  return prob;
}

std::vector<Block> g_gradient(const std::vector<Block>& x, double gamma) {
  std::vector<Block> g;
  g.reserve(x.size());
  for (const auto& xi : x) {
    Block gi = Block::Zero(xi.rows(), xi.cols());
    gi(kU, 0) = gamma * (2.0 * xi(kU, 0) - 1.0);
    g.push_back(std::move(gi));
  }
  return g;
}

double g_value(const std::vector<Block>& x, double gamma) {
  double s = 0.0;
  for (const auto& xi : x) s += xi(kU, 0) * xi(kU, 0) - xi(kU, 0);
  return gamma * s;
}

XBlockSolver::XBlockSolver(const DcOpfProblem& prob, double rho, double prox_weight)
    : rho_(rho), weight_(prox_weight) {
  factors_.reserve(prob.A.size());
  for (std::size_t i = 0; i < prob.A.size(); ++i) {
    const Eigen::Matrix4d K = prob.Q[i] + rho * (prob.A[i].transpose() * prob.A[i]) +
                              prox_weight * Eigen::Matrix4d::Identity();
    factors_.emplace_back(K);
    if (factors_.back().info() != Eigen::Success || !factors_.back().isPositive()) {
      throw BlockOracleError("x block " + std::to_string(i) + ": subproblem matrix is not positive definite");
    }
  }
}

Eigen::Vector4d XBlockSolver::solve(std::size_t i, const Eigen::Vector4d& rhs) const {
  return factors_.at(i).solve(rhs);
}

Block x_block_update(std::size_t i, const XBlockContext& ctx, const DcOpfProblem& prob,
                     const XBlockSolver* cached) {
  if (!ctx.generator || !ctx.generator->quadratic_scale) {
    throw BlockOracleError("dcopf x oracle needs a scaled squared-norm Bregman generator");
  }
  const double w = ctx.mu * *ctx.generator->quadratic_scale;
  const Eigen::MatrixXd& A = prob.A.at(i);
  const Eigen::VectorXd shifted = ctx.multiplier->col(0) + ctx.rho * ctx.partial_residual.col(0);
  const Eigen::Vector4d rhs =
      prob.q[i] + as_vec4(ctx.linear_term) + A.transpose() * shifted - w * as_vec4(*ctx.current);

  Eigen::Vector4d x;
  if (cached && cached->rho() == ctx.rho && cached->prox_weight() == w) {
    x = -cached->solve(i, rhs);
  } else {
    const Eigen::Matrix4d K =
        prob.Q[i] + ctx.rho * (A.transpose() * A) + w * Eigen::Matrix4d::Identity();
    Eigen::LDLT<Eigen::Matrix4d> ldlt(K);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
        ldlt.vectorD().cwiseAbs().minCoeff() <= 1e-14 * std::max(1.0, K.norm())) {
      throw BlockOracleError("x block " + std::to_string(i) + ": subproblem matrix is numerically singular");
    }
    x = -ldlt.solve(rhs);
  }
  return Block(x);
}

Block y_block_update(const YBlockContext& ctx, double eta) {
  if (!(eta > 0.0) || !(ctx.rho > 0.0)) throw BlockOracleError("y block: need eta > 0 and rho > 0");
  double w = 0.0;
  if (ctx.nu > 0.0) {
    if (!ctx.generator || !ctx.generator->quadratic_scale) {
      throw BlockOracleError("dcopf y oracle needs a scaled squared-norm Bregman generator");
    }
    w = ctx.nu * *ctx.generator->quadratic_scale;
  }
  Block v = -ctx.x_residual - *ctx.multiplier / ctx.rho;
  if (w > 0.0) v = (ctx.rho * v + w * *ctx.current) / (ctx.rho + w);
  const double shrink = (ctx.rho + w) / (eta + ctx.rho + w);
  return v.unaryExpr([shrink](double t) { return t >= 0.0 ? t : shrink * t; });
}

ProblemSpec make_problem(const DcOpfProblem& prob, const DcOpfCase& c, double rho, double alpha) {
  auto shared = std::make_shared<const DcOpfProblem>(prob);
  auto cache = std::make_shared<const XBlockSolver>(prob, rho, alpha);
  const double eta = c.eta;
  const double gamma = c.gamma;

  ProblemSpec p;
  p.x_shapes.assign(prob.A.size(), BlockShape{kBlockDim, 1});
  p.y_shape = {prob.p, 1};
  p.constraint_shape = {prob.p, 1};
  p.apply_A = [shared](std::size_t i, const Block& x) -> Block { return shared->A.at(i) * x; };
  p.apply_A_transpose = [shared](std::size_t i, const Block& v) -> Block {
    return shared->A.at(i).transpose() * v;
  };
  p.apply_B = [](const Block& y) -> Block { return y; };
  p.apply_B_transpose = [](const Block& v) -> Block { return v; };
  p.rhs = prob.b;

  p.eval_f = [shared](std::size_t i, const Block& x) {
    const Eigen::Vector4d v = as_vec4(x);
    return 0.5 * v.dot(shared->Q[i] * v) + shared->q[i].dot(v) + shared->c[i];
  };
  p.eval_H = [eta](const Block& y) { return 0.5 * eta * dist_sq_nonneg_orthant(y.col(0)).value; };
  p.grad_H = [eta](const Block& y) -> Block {
    return 0.5 * eta * dist_sq_nonneg_orthant(y.col(0)).gradient;
  };
  p.eval_G = [gamma](const std::vector<Block>& x) { return g_value(x, gamma); };
  p.subgrad_G = [gamma](const std::vector<Block>& x) { return g_gradient(x, gamma); };

  p.solve_x_block = [shared, cache](const XBlockContext& ctx) {
    return x_block_update(ctx.block_index, ctx, *shared, cache.get());
  };
  p.solve_y_block = [eta](const YBlockContext& ctx) { return y_block_update(ctx, eta); };
  return p;
}

SolverParams make_params(const DcOpfCase& c, double alpha, double tolerance, int max_iterations) {
  ProblemConstants k;
  k.ell_H = c.eta;
  k.beta = 0.0;  // G is convex
  k.lambda = 1.0;
  SolverParams p = make_standard_params(c.rho.value_or(c.default_rho()), alpha, k);
  p.max_iterations = max_iterations;
  p.stop = {StopRule::RelativeChange, tolerance, true};
  return p;
}

SolverState initial_state(const ProblemSpec& spec, const DcOpfProblem& prob, const DcOpfCase& c,
                          const DcOpfInit& init) {
  std::vector<Block> x(c.num_buses(), Block::Zero(kBlockDim, 1));
  if (init.kind == InitKind::Random) {
    std::mt19937_64 rng(init.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (std::size_t i = 0; i < x.size(); ++i) {
      x[i](kPv, 0) = unit(rng) * c.pv_capacity;
      x[i](kGen, 0) = unit(rng) * c.buses[i].gen_capacity;
      x[i](kTheta, 0) = unit(rng) * kTwoPi;
      x[i](kU, 0) = unit(rng);
    }
  }
  const Eigen::VectorXd ax = apply_all(prob, x);
  Block y = (prob.b - ax).cwiseMax(0.0);
  return make_initial_state(spec, std::move(x), std::move(y), Block::Zero(prob.p, 1));
}

double round_u(double u) { return u >= 0.5 ? 1.0 : 0.0; }

double opf1_objective(const DcOpfCase& c, const std::vector<BusResult>& buses, bool rounded) {
  double v = 0.0;
  for (std::size_t i = 0; i < buses.size(); ++i) {
    const auto& bus = c.buses.at(i);
    const double u = rounded ? round_u(buses[i].u) : buses[i].u;
    const double pg = buses[i].p_gen;
    v += c.pv_cost * u + bus.gen_a * pg * pg + bus.gen_b * pg + bus.gen_c;
  }
  return v;
}

DcOpfSolution solve_dcopf(const DcOpfCase& c, const DcOpfRunOptions& opts) {
  return solve_built(c, build_problem(c), opts);
}

FrozenCheck frozen_u_check(const DcOpfCase& c, const DcOpfSolution& sol, double tol,
                           const DcOpfRunOptions& opts) {
  if (sol.buses.size() != c.num_buses()) throw DimensionError("frozen_u_check: bus count mismatch");
  FrozenCheck out;
  DcOpfCase fixed = c;
  fixed.gamma = 0.0;
  DcOpfProblem prob = build_problem(fixed);

  // The u box rows become u <= u_r and -u <= -u_r.
  const std::size_t n = c.num_buses();
  const Eigen::Index u_rows = static_cast<Eigen::Index>(n + 1 + prob.num_lines_directed + 4 * n);
  out.u.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.u[i] = round_u(sol.buses[i].u);
    prob.b(u_rows + 2 * static_cast<Eigen::Index>(i)) = out.u[i];
    prob.b(u_rows + 2 * static_cast<Eigen::Index>(i) + 1) = -out.u[i];
  }

  DcOpfRunOptions o = opts;
  o.init = {InitKind::LowerBound, 0};
  o.record_trace = false;
  out.resolve = solve_built(fixed, prob, o);
  out.max_violation = out.resolve.max_violation;
  out.feasible = out.resolve.status != SolveStatus::OracleFailure && out.max_violation <= tol;
  return out;
}

DcOpfCase two_bus_fixture() {
  DcOpfCase c;
  c.name = "2bus";
  // Bus 1 hosts the diesel generator; bus 2 is a pure load.
  c.buses = {Bus{0.6, 0.246, 0.084, 0.433, 5.0}, Bus{0.9, 0.0, 0.0, 0.0, 0.0}};
  c.lines = {Line{0, 1, 10.0}};
  c.pv_cost = 1.0;
  c.pv_capacity = 0.8;
  c.line_limit = 3.0;
  c.gamma = 80.0;
  // The u box is only enforced through the penalty, so a vertex u sits about
  // (gamma + C)/(eta - 2 gamma) outside [0, 1]; eta = 2e4 keeps that below 5e-3.
  c.eta = 2.0e4;
  return c;
}

DcOpfCase synthetic_case(std::size_t buses, std::uint64_t seed) {
  if (buses < 2) throw std::invalid_argument("synthetic_case: need at least 2 buses");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> demand(0.05, 0.4);
  std::uniform_real_distribution<double> susc(5.0, 20.0);
  DcOpfCase c;
  c.name = "synthetic" + std::to_string(buses);
  c.buses.resize(buses);
  for (auto& b : c.buses) b.demand = demand(rng);
  for (std::size_t i = 0; i < buses; i += 3) c.buses[i] = Bus{c.buses[i].demand, 0.246, 0.084, 0.433, 5.0};
  for (std::size_t i = 1; i < buses; ++i) {
    std::uniform_int_distribution<std::size_t> parent(0, i - 1);
    c.lines.push_back(Line{parent(rng), i, susc(rng)});
  }
  return c;
}

DcOpfCase parse_case_text(const std::string& text) {
  DcOpfCase c;
  c.name = "case";
  std::map<long, Bus> buses;
  std::vector<std::tuple<long, long, double, int>> lines;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  auto fail = [&line_no](const std::string& msg) {
    throw std::runtime_error("case text line " + std::to_string(line_no) + ": " + msg);
  };
  while (std::getline(in, raw)) {
    ++line_no;
    const auto cut = raw.find_first_of("#%");
    if (cut != std::string::npos) raw.erase(cut);
    std::istringstream ls(raw);
    std::string key;
    if (!(ls >> key)) continue;
    if (key == "name") {
      if (!(ls >> c.name)) fail("'name' expects a value");
      continue;
    }
    std::vector<double> vals;
    std::string tok;
    while (ls >> tok) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(tok, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != tok.size()) fail("non-numeric token '" + tok + "'");
      vals.push_back(v);
    }
    auto scalar = [&](double& target) {
      if (vals.size() != 1) fail("'" + key + "' expects one value");
      target = vals[0];
    };
    if (key == "pv_cost") {
      scalar(c.pv_cost);
    } else if (key == "pv_capacity") {
      scalar(c.pv_capacity);
    } else if (key == "line_limit") {
      scalar(c.line_limit);
    } else if (key == "gamma") {
      scalar(c.gamma);
    } else if (key == "eta") {
      scalar(c.eta);
    } else if (key == "rho") {
      double r = 0.0;
      scalar(r);
      c.rho = r;
    } else if (key == "bus") {
      if (vals.size() != 2 && vals.size() != 6) fail("'bus' expects id demand [a b c capacity]");
      const long id = std::lround(vals[0]);
      if (buses.count(id)) fail("duplicate bus id " + std::to_string(id));
      Bus b;
      b.demand = vals[1];
      if (vals.size() == 6) b = Bus{vals[1], vals[2], vals[3], vals[4], vals[5]};
      buses[id] = b;
    } else if (key == "line") {
      if (vals.size() != 3) fail("'line' expects from to susceptance");
      lines.emplace_back(std::lround(vals[0]), std::lround(vals[1]), vals[2], line_no);
    } else {
      fail("unknown key '" + key + "'");
    }
  }
  std::map<long, std::size_t> index;
  for (const auto& [id, bus] : buses) {
    index[id] = c.buses.size();
    c.buses.push_back(bus);
  }
  for (const auto& [from, to, s, ln] : lines) {
    if (!index.count(from) || !index.count(to)) {
      line_no = ln;
      fail("line references unknown bus");
    }
    c.lines.push_back(Line{index[from], index[to], s});
  }
  validate_case(c);
  return c;
}

DcOpfCase load_case_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open case file " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  try {
    DcOpfCase c = parse_case_text(ss.str());
    if (c.name == "case") c.name = path;
    return c;
  } catch (const std::runtime_error& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

void write_solution_csv(std::ostream& os, const DcOpfSolution& sol) {
  const auto old = os.precision(17);
  os << "bus,u,P_pv,P_g,theta\n";
  for (std::size_t i = 0; i < sol.buses.size(); ++i) {
    const auto& b = sol.buses[i];
    os << (i + 1) << ',' << b.u << ',' << b.p_pv << ',' << b.p_gen << ',' << b.theta << '\n';
  }
  os.precision(old);
}

std::string solution_json(const DcOpfCase& c, const DcOpfSolution& sol) {
  nlohmann::json j;
  j["case"] = c.name;
  j["status"] = to_string(sol.status);
  j["objective_opf1"] = sol.objective_opf1;
  j["objective_opf1_raw_u"] = sol.objective_opf1_raw;
  j["objective_relaxed"] = sol.objective_relaxed;
  j["binary_violation"] = sol.binary_violation;
  j["feasibility_residual"] = sol.feasibility_residual;
  j["max_violation"] = sol.max_violation;
  j["iterations"] = sol.iterations;
  j["wall_time"] = sol.wall_time;
  nlohmann::json buses = nlohmann::json::array();
  for (std::size_t i = 0; i < sol.buses.size(); ++i) {
    const auto& b = sol.buses[i];
    buses.push_back({{"bus", i + 1}, {"u", b.u}, {"P_pv", b.p_pv}, {"P_g", b.p_gen}, {"theta", b.theta}});
  }
  j["buses"] = std::move(buses);
  return j.dump(2);
}

std::string case_json(const DcOpfCase& c) {
  nlohmann::json j;
  j["name"] = c.name;
  j["pv_cost"] = c.pv_cost;
  j["pv_capacity"] = c.pv_capacity;
  j["line_limit"] = c.line_limit;
  j["gamma"] = c.gamma;
  j["eta"] = c.eta;
  if (c.rho) j["rho"] = *c.rho;
  nlohmann::json buses = nlohmann::json::array();
  for (std::size_t i = 0; i < c.buses.size(); ++i) {
    const auto& b = c.buses[i];
    buses.push_back({{"bus", i + 1}, {"demand", b.demand}, {"a", b.gen_a}, {"b", b.gen_b},
                     {"c", b.gen_c}, {"capacity", b.gen_capacity}});
  }
  j["buses"] = std::move(buses);
  nlohmann::json lines = nlohmann::json::array();
  for (const auto& l : c.lines) {
    lines.push_back({{"from", l.from + 1}, {"to", l.to + 1}, {"susceptance", l.susceptance}});
  }
  j["lines"] = std::move(lines);
  return j.dump(2);
}

}  // namespace bpladmm::dcopf

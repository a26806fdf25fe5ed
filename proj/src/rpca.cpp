#include "bpladmm/rpca.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>

#include <Eigen/SVD>

namespace bpladmm::rpca {

namespace {

Eigen::MatrixXd gaussian(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> n01(0.0, 1.0);
  Eigen::MatrixXd out(rows, cols);
  // Column-major fill, matching randn's element order.
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) out(i, j) = n01(rng);
  return out;
}

double stacked_norm(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const Eigen::MatrixXd& c) {
  return std::sqrt(a.squaredNorm() + b.squaredNorm() + c.squaredNorm());
}

SweepScheme scheme_for(const RpcaInstance& inst, const RpcaConfig& c, bool bpl) {
  SweepScheme s;
  s.rho = c.rho;
  s.alpha = bpl ? c.alpha : 0.0;
  s.tau = c.effective_tau(inst.M.rows(), inst.M.cols());
  s.gamma = c.gamma;
  s.linearize_spectral = bpl;
  return s;
}

RpcaSolution run_scheme(const RpcaInstance& inst, const RpcaConfig& config, const SweepScheme& scheme,
                        std::uint64_t init_seed) {
  const auto t0 = std::chrono::steady_clock::now();
  RpcaIterate it = initial_iterate(inst, init_seed);
  RpcaSolution sol;
  HistorySummary& sum = sol.summary;

  for (int n = 0; n < config.max_iterations; ++n) {
    RpcaIterate next = closed_form_sweep(it, inst.M, scheme);

    IterationReport rep;
    rep.n = n + 1;
    const Eigen::MatrixXd r = next.L + next.S - next.T;
    rep.feasibility = r.norm();
    rep.augmented_lagrangian = augmented_lagrangian(next, inst.M, scheme);
    rep.merit = rep.augmented_lagrangian;  // nu = 0, so c = 0
    rep.objective = rep.augmented_lagrangian - (next.Z.cwiseProduct(r)).sum() -
                    0.5 * scheme.rho * r.squaredNorm();
    const double dL = (next.L - it.L).squaredNorm();
    const double dS = (next.S - it.S).squaredNorm();
    const double dT = (next.T - it.T).squaredNorm();
    rep.step_x = std::sqrt(dL + dS);
    rep.step_y = std::sqrt(dT);
    rep.step_z = (next.Z - it.Z).norm();

    if (sum.last_merit) {
      const double inc = rep.merit - *sum.last_merit;
      sum.max_merit_increase = std::max(sum.max_merit_increase, inc);
      if (inc > 1e-8 * (1.0 + std::abs(*sum.first_merit))) ++sum.merit_violations;
    } else {
      sum.first_merit = rep.merit;
    }
    sum.last_merit = rep.merit;
    sum.sum_step_x_sq += dL + dS;
    sum.sum_step_y_sq += dT;
    sum.sum_step_z_sq += rep.step_z * rep.step_z;
    ++sum.total_reports;
    if (config.record_trace) sol.trace.push_back(rep);

    const double change = std::sqrt(dL + dS + dT) / (stacked_norm(it.L, it.S, it.T) + 1.0);
    it = std::move(next);
    sol.iterations = n + 1;
    if (change <= config.tolerance) {
      sol.converged = true;
      break;
    }
  }
  sol.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  const auto metrics = recovery_metrics(it.L, it.S, it.T, inst);
  sol.relative_error = metrics.relative_error;
  sol.rank_L = metrics.rank_L;
  sol.sparsity_S = metrics.sparsity_S;
  sol.feasibility = (it.L + it.S - it.T).norm();
  sol.L = std::move(it.L);
  sol.S = std::move(it.S);
  sol.T = std::move(it.T);
  sol.Z = std::move(it.Z);
  return sol;
}

void read_matrix(std::istream& is, Eigen::MatrixXd& A, Eigen::Index m, Eigen::Index d) {
  A.resize(m, d);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < d; ++j)
      if (!(is >> A(i, j))) throw std::runtime_error("load_instance: truncated matrix data");
}

void write_matrix(std::ostream& os, const char* name, const Eigen::MatrixXd& A) {
  os << name << '\n';
  for (Eigen::Index i = 0; i < A.rows(); ++i) {
    for (Eigen::Index j = 0; j < A.cols(); ++j) os << (j ? " " : "") << A(i, j);
    os << '\n';
  }
}

}  // namespace

double RpcaConfig::effective_tau(Eigen::Index m, Eigen::Index d) const {
  return tau > 0.0 ? tau : 1.0 / std::sqrt(static_cast<double>(std::max(m, d)));
}

RpcaConfig admm3_config(const RpcaConfig& base) {
  RpcaConfig c = base;
  c.rho = 2.0;
  c.alpha = 0.0;
  return c;
}

RpcaInstance generate_instance(Eigen::Index m, Eigen::Index d, int r, double s, double noise,
                               std::uint64_t seed) {
  if (m < 1 || d < 1) throw std::invalid_argument("generate_instance: empty matrix size");
  if (r < 1 || r > std::min(m, d)) {
    throw std::invalid_argument("generate_instance: rank must satisfy 1 <= r <= min(m, d)");
  }
  if (!(s > 0.0 && s < 1.0)) throw std::invalid_argument("generate_instance: need 0 < s < 1");
  if (!(noise >= 0.0)) throw std::invalid_argument("generate_instance: noise must be >= 0");

  std::mt19937_64 rng(seed);
  RpcaInstance inst;
  inst.rank = r;
  inst.sparsity_ratio = s;
  inst.noise = noise;
  inst.seed = seed;

  const Eigen::MatrixXd G1 = gaussian(m, r, rng);
  const Eigen::MatrixXd G2 = gaussian(r, d, rng);
  inst.L_true = G1 * G2;

  const Eigen::Index total = m * d;
  inst.sparsity_count = static_cast<Eigen::Index>(std::llround(s * static_cast<double>(total)));
  std::vector<Eigen::Index> perm(static_cast<std::size_t>(total));
  std::iota(perm.begin(), perm.end(), Eigen::Index{0});
  std::shuffle(perm.begin(), perm.end(), rng);
  inst.S_true = Eigen::MatrixXd::Zero(m, d);
  std::normal_distribution<double> n01(0.0, 1.0);
  for (Eigen::Index k = 0; k < inst.sparsity_count; ++k) {
    double v = n01(rng);
    while (v == 0.0) v = n01(rng);  // keep the support size exact
    inst.S_true.data()[perm[static_cast<std::size_t>(k)]] = v;
  }

  inst.T_true = inst.L_true + inst.S_true;
  inst.M = inst.T_true + noise * gaussian(m, d, rng);
  return inst;
}

void save_instance(std::ostream& os, const RpcaInstance& inst) {
  const auto old = os.precision(17);
  os << "rpca-instance 1\n"
     << inst.M.rows() << ' ' << inst.M.cols() << ' ' << inst.rank << ' ' << inst.sparsity_ratio
     << ' ' << inst.sparsity_count << ' ' << inst.noise << ' ' << inst.seed << '\n';
  write_matrix(os, "M", inst.M);
  write_matrix(os, "L", inst.L_true);
  write_matrix(os, "S", inst.S_true);
  os.precision(old);
}

RpcaInstance load_instance(std::istream& is) {
  std::string magic;
  int version = 0;
  if (!(is >> magic >> version) || magic != "rpca-instance" || version != 1) {
    throw std::runtime_error("load_instance: missing 'rpca-instance 1' header");
  }
  RpcaInstance inst;
  Eigen::Index m = 0, d = 0;
  if (!(is >> m >> d >> inst.rank >> inst.sparsity_ratio >> inst.sparsity_count >> inst.noise >>
        inst.seed)) {
    throw std::runtime_error("load_instance: malformed header line");
  }
  if (m < 1 || d < 1) throw std::runtime_error("load_instance: bad dimensions");
  for (auto* target : {&inst.M, &inst.L_true, &inst.S_true}) {
    std::string tag;
    if (!(is >> tag)) throw std::runtime_error("load_instance: missing matrix section");
    read_matrix(is, *target, m, d);
  }
  inst.T_true = inst.L_true + inst.S_true;
  return inst;
}

Eigen::Index numerical_rank(const Eigen::MatrixXd& A) {
  if (A.size() == 0) return 0;
  Eigen::BDCSVD<Eigen::MatrixXd> svd(A);
  const Eigen::VectorXd& s = svd.singularValues();
  if (s(0) == 0.0) return 0;
  const double tol = static_cast<double>(std::max(A.rows(), A.cols())) *
                     std::numeric_limits<double>::epsilon() * s(0);
  return (s.array() > tol).count();
}

RecoveryMetrics recovery_metrics(const Eigen::MatrixXd& L, const Eigen::MatrixXd& S,
                                 const Eigen::MatrixXd& T, const RpcaInstance& inst) {
  if (L.rows() != inst.M.rows() || L.cols() != inst.M.cols() || S.rows() != L.rows() ||
      S.cols() != L.cols() || T.rows() != L.rows() || T.cols() != L.cols()) {
    throw DimensionError("recovery_metrics: shape mismatch");
  }
  RecoveryMetrics m;
  m.relative_error = stacked_norm(L - inst.L_true, S - inst.S_true, T - inst.T_true) /
                     (stacked_norm(inst.L_true, inst.S_true, inst.T_true) + 1.0);
  m.rank_L = numerical_rank(L);
  m.sparsity_S = (S.array() != 0.0).count();
  return m;
}

RpcaIterate closed_form_sweep(const RpcaIterate& it, const Eigen::MatrixXd& M,
                              const SweepScheme& sc) {
  const double denom = sc.rho + sc.alpha;
  RpcaIterate out;
  out.L = singular_value_shrink((-it.Z - sc.rho * it.S + sc.rho * it.T + sc.alpha * it.L) / denom,
                                1.0 / denom);
  Eigen::MatrixXd s_arg = -it.Z - sc.rho * out.L + sc.rho * it.T + sc.alpha * it.S;
  if (sc.linearize_spectral) s_arg += sc.tau * spectral_norm_subgradient(it.S);
  out.S = soft_shrink(s_arg / denom, sc.tau / denom);
  out.T = (sc.gamma * M + it.Z + sc.rho * out.L + sc.rho * out.S) / (sc.gamma + sc.rho);
  out.Z = it.Z + sc.rho * (out.L + out.S - out.T);
  return out;
}

double augmented_lagrangian(const RpcaIterate& it, const Eigen::MatrixXd& M,
                            const SweepScheme& sc) {
  const Eigen::MatrixXd r = it.L + it.S - it.T;
  double v = nuclear_norm(it.L) + sc.tau * it.S.lpNorm<1>() + 0.5 * sc.gamma * (it.T - M).squaredNorm();
  if (sc.linearize_spectral) v -= sc.tau * spectral_norm(it.S);
  return v + it.Z.cwiseProduct(r).sum() + 0.5 * sc.rho * r.squaredNorm();
}

RpcaIterate initial_iterate(const RpcaInstance& inst, std::uint64_t init_seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(init_seed & 0xffffffffu),
                    static_cast<std::uint32_t>(init_seed >> 32), 0x1b1u};
  std::mt19937_64 rng(seq);
  RpcaIterate it;
  it.L = gaussian(inst.M.rows(), inst.M.cols(), rng);
  it.S = gaussian(inst.M.rows(), inst.M.cols(), rng);
  it.T = inst.M;
  it.Z = Eigen::MatrixXd::Zero(inst.M.rows(), inst.M.cols());
  return it;
}

SolverParams make_params(const RpcaConfig& config) {
  ProblemConstants c;
  c.ell_H = config.gamma;
  c.ell_P = 0.0;
  c.beta = 0.0;
  c.lambda = 1.0;
  SolverParams p = make_standard_params(config.rho, config.alpha, c);
  p.max_iterations = config.max_iterations;
  p.stop = {StopRule::RelativeChangeShifted, config.tolerance, false};
  return p;
}

RpcaSolution bpl_admm_rpca(const RpcaInstance& inst, const RpcaConfig& config,
                           std::uint64_t init_seed) {
  validate_parameters(make_params(config));
  return run_scheme(inst, config, scheme_for(inst, config, true), init_seed);
}

RpcaSolution admm3_baseline(const RpcaInstance& inst, const RpcaConfig& config,
                            std::uint64_t init_seed) {
  if (!(config.rho > 0.0)) throw std::invalid_argument("admm3_baseline: rho must be > 0");
  return run_scheme(inst, config, scheme_for(inst, config, false), init_seed);
}

ProblemSpec make_problem(const Eigen::MatrixXd& M, double tau, double gamma) {
  const BlockShape shape{M.rows(), M.cols()};
  ProblemSpec p;
  p.x_shapes = {shape, shape};
  p.y_shape = shape;
  p.constraint_shape = shape;
  p.apply_A = [](std::size_t, const Block& x) -> Block { return x; };
  p.apply_A_transpose = [](std::size_t, const Block& v) -> Block { return v; };
  p.apply_B = [](const Block& y) -> Block { return -y; };
  p.apply_B_transpose = [](const Block& v) -> Block { return -v; };
  p.rhs = shape.zero();

  p.eval_f = [tau](std::size_t i, const Block& x) {
    return i == 0 ? nuclear_norm(x) : tau * x.lpNorm<1>();
  };
  p.eval_H = [M, gamma](const Block& T) { return 0.5 * gamma * (T - M).squaredNorm(); };
  p.grad_H = [M, gamma](const Block& T) -> Block { return gamma * (T - M); };
  p.eval_G = [tau](const std::vector<Block>& x) { return tau * spectral_norm(x[1]); };
  p.subgrad_G = [tau, shape](const std::vector<Block>& x) {
    return std::vector<Block>{shape.zero(), tau * spectral_norm_subgradient(x[1])};
  };

  p.solve_x_block = [tau](const XBlockContext& ctx) -> Block {
    if (!ctx.generator || !ctx.generator->quadratic_scale) {
      throw BlockOracleError("rpca x oracle needs a scaled squared-norm Bregman generator");
    }
    const double w = ctx.mu * *ctx.generator->quadratic_scale;
    const double denom = ctx.rho + w;
    const Block arg = (-ctx.linear_term - *ctx.multiplier - ctx.rho * ctx.partial_residual +
                       w * *ctx.current) / denom;
    return ctx.block_index == 0 ? singular_value_shrink(arg, 1.0 / denom)
                                : soft_shrink(arg, tau / denom);
  };
  p.solve_y_block = [M, gamma](const YBlockContext& ctx) -> Block {
    // argmin (gamma/2)||T - M||^2 - <Z, T> + (rho/2)||X - T||^2 + nu D_psi(T, T_n)
    double w = 0.0;
    if (ctx.nu > 0.0) {
      if (!ctx.generator || !ctx.generator->quadratic_scale) {
        throw BlockOracleError("rpca y oracle needs a scaled squared-norm Bregman generator");
      }
      w = ctx.nu * *ctx.generator->quadratic_scale;
    }
    Block num = gamma * M + *ctx.multiplier + ctx.rho * ctx.x_residual;
    if (w > 0.0) num += w * *ctx.current;
    return num / (gamma + ctx.rho + w);
  };
  return p;
}

}  // namespace bpladmm::rpca

#pragma once

// Robust PCA with the difference-of-norms sparsity regularizer
//
//   min ||L||_* + tau ||S||_1 - tau ||S|| + (gamma/2)||T - M||_F^2   s.t.  T = L + S
//
// solved by BPL-ADMM (blocks L, S; y = T; z = Z), plus the classical
// three-block ADMM on the convex model without the -tau||S|| term.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "bpladmm/engine.hpp"

namespace bpladmm::rpca {

struct RpcaConfig {
  double tau = 0.0;  // 0 selects 1/sqrt(max(m, d))
  double gamma = 1.0;
  double alpha = 1e-2;
  double rho = 2.0 + 1e-10;
  double tolerance = 1e-6;
  int max_iterations = 4000;
  bool record_trace = false;  // keep every IterationReport in the solution

  double effective_tau(Eigen::Index m, Eigen::Index d) const;
};

/// The classical ADMM-3 settings: rho = 2, no proximal or linearized term.
RpcaConfig admm3_config(const RpcaConfig& base = {});

struct RpcaInstance {
  Eigen::MatrixXd M;
  Eigen::MatrixXd L_true;
  Eigen::MatrixXd S_true;
  Eigen::MatrixXd T_true;
  int rank = 0;
  double sparsity_ratio = 0.0;
  Eigen::Index sparsity_count = 0;
  double noise = 0.0;
  std::uint64_t seed = 0;
};

/// L = G1 G2 (Gaussian factors), S with round(s m d) Gaussian entries on a
/// uniformly random support, M = L + S + noise * N(0, 1).
RpcaInstance generate_instance(Eigen::Index m, Eigen::Index d, int r, double s, double noise,
                               std::uint64_t seed);

void save_instance(std::ostream& os, const RpcaInstance& inst);
RpcaInstance load_instance(std::istream& is);

struct RecoveryMetrics {
  double relative_error = 0.0;
  Eigen::Index rank_L = 0;
  Eigen::Index sparsity_S = 0;
};

/// Singular values above max(m, d) * eps * sigma_1.
Eigen::Index numerical_rank(const Eigen::MatrixXd& A);

RecoveryMetrics recovery_metrics(const Eigen::MatrixXd& L, const Eigen::MatrixXd& S,
                                 const Eigen::MatrixXd& T, const RpcaInstance& inst);

struct RpcaIterate {
  Eigen::MatrixXd L, S, T, Z;
};

struct RpcaSolution {
  Eigen::MatrixXd L, S, T, Z;
  int iterations = 0;
  bool converged = false;
  double wall_time = 0.0;
  double relative_error = 0.0;
  Eigen::Index rank_L = 0;
  Eigen::Index sparsity_S = 0;
  double feasibility = 0.0;      // ||L + S - T||_F
  HistorySummary summary;        // merit statistics over the whole run
  std::vector<IterationReport> trace;
};

/// Scheme switches shared by BPL-ADMM and ADMM-3.
struct SweepScheme {
  double rho = 0.0;
  double alpha = 0.0;            // proximal weight (mu * alpha)
  double tau = 0.0;
  double gamma = 1.0;
  bool linearize_spectral = true;  // include tau * g_2 with g_2 in d||S_n||
};

/// One closed-form sweep (L, S, T, Z) applied directly to the matrices.
RpcaIterate closed_form_sweep(const RpcaIterate& it, const Eigen::MatrixXd& M,
                              const SweepScheme& scheme);

/// L and S standard normal from init_seed, T = M, Z = 0.
RpcaIterate initial_iterate(const RpcaInstance& inst, std::uint64_t init_seed);

RpcaSolution bpl_admm_rpca(const RpcaInstance& inst, const RpcaConfig& config,
                           std::uint64_t init_seed);
RpcaSolution admm3_baseline(const RpcaInstance& inst, const RpcaConfig& config,
                            std::uint64_t init_seed);

/// The same model as a generic ProblemSpec: blocks (L, S), y = T, A_1 = A_2 = I,
/// B = -I, b = 0, G(S) = tau ||S||.
ProblemSpec make_problem(const Eigen::MatrixXd& M, double tau, double gamma);

/// Engine parameters matching the config (ell_H = gamma, beta = 0, lambda = 1).
SolverParams make_params(const RpcaConfig& config);

/// Augmented Lagrangian of the scheme's model at (L, S, T, Z).
double augmented_lagrangian(const RpcaIterate& it, const Eigen::MatrixXd& M,
                            const SweepScheme& scheme);

}  // namespace bpladmm::rpca

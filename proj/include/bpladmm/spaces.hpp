#pragma once

// Block vector spaces, Bregman distances and the proximal maps shared by the
// RPCA and DC-OPF applications.
//
// Every block (x_i, y, z, b) is an Eigen::MatrixXd under the Frobenius inner
// product. Column vectors are simply n x 1 matrices.

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace bpladmm {

using Block = Eigen::MatrixXd;

struct BlockShape {
  Eigen::Index rows = 0;
  Eigen::Index cols = 1;

  Eigen::Index size() const { return rows * cols; }
  bool matches(const Block& b) const { return b.rows() == rows && b.cols() == cols; }
  Block zero() const { return Block::Zero(rows, cols); }
  bool operator==(const BlockShape&) const = default;
};

inline BlockShape shape_of(const Block& b) { return {b.rows(), b.cols()}; }

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Frobenius inner product; throws DimensionError on shape mismatch.
double inner(const Block& u, const Block& v);
inline double norm(const Block& v) { return v.norm(); }

/// Returns a*u + v.
Block axpy(double a, const Block& u, const Block& v);

/// Differentiable convex function used to build a Bregman distance.
struct BregmanGenerator {
  std::function<double(const Block&)> phi;
  std::function<Block(const Block&)> grad_phi;
  double strong_convexity = 0.0;           // alpha
  std::optional<double> grad_lipschitz;    // ell_phi, empty when unknown
  // Set when phi(x) = (s/2)||x||^2; closed-form block oracles rely on it.
  std::optional<double> quadratic_scale;
  std::optional<BlockShape> shape;         // empty: any shape accepted
};

/// phi(x) = (scale/2)||x||^2. scale = 2 gives D(u,v) = ||u - v||^2.
BregmanGenerator squared_norm_generator(double scale = 1.0);

/// phi(x) = x^T M x for a symmetric positive semidefinite M (column blocks).
/// D(u,v) = (u-v)^T M (u-v); modulus 2*lambda_min(M), Lipschitz 2*lambda_max(M).
BregmanGenerator quadratic_form_generator(const Eigen::MatrixXd& M);

double bregman_distance(const BregmanGenerator& gen, const Block& u, const Block& v);

/// Entrywise sign(t) * max(|t| - c, 0): the prox of c||.||_1.
Block soft_shrink(const Block& v, double c);

/// Singular value thresholding: the prox of c||.||_*.
Block singular_value_shrink(const Block& M, double c);

/// u1 v1^T from the leading singular pair; zero matrix when S = 0.
Block spectral_norm_subgradient(const Block& S);

double nuclear_norm(const Block& M);
double spectral_norm(const Block& M);

struct DistSqResult {
  double value = 0.0;
  Eigen::VectorXd gradient;
};

/// dist^2(y, R^p_+) = sum_j min(y_j, 0)^2 and its gradient 2 min(y, 0).
DistSqResult dist_sq_nonneg_orthant(const Eigen::VectorXd& y);

}  // namespace bpladmm

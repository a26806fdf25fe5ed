#include "bpladmm/spaces.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/SVD>

namespace bpladmm {

namespace {

void require_same_shape(const Block& u, const Block& v, const char* what) {
  if (u.rows() != v.rows() || u.cols() != v.cols()) {
    std::ostringstream os;
    os << what << ": shape mismatch " << u.rows() << "x" << u.cols() << " vs " << v.rows()
       << "x" << v.cols();
    throw DimensionError(os.str());
  }
}

void require_finite(const Block& M, const char* what) {
  if (!M.allFinite()) throw std::invalid_argument(std::string(what) + ": non-finite entries");
}

}  // namespace

double inner(const Block& u, const Block& v) {
  require_same_shape(u, v, "inner");
  return u.cwiseProduct(v).sum();
}

Block axpy(double a, const Block& u, const Block& v) {
  require_same_shape(u, v, "axpy");
  return a * u + v;
}

BregmanGenerator squared_norm_generator(double scale) {
  if (!(scale > 0.0)) throw std::invalid_argument("squared_norm_generator: scale must be > 0");
  BregmanGenerator g;
  g.phi = [scale](const Block& x) { return 0.5 * scale * x.squaredNorm(); };
  g.grad_phi = [scale](const Block& x) -> Block { return scale * x; };
  g.strong_convexity = scale;
  g.grad_lipschitz = scale;
  g.quadratic_scale = scale;
  return g;
}

BregmanGenerator quadratic_form_generator(const Eigen::MatrixXd& M) {
  if (M.rows() != M.cols()) throw DimensionError("quadratic_form_generator: M must be square");
  if (!M.isApprox(M.transpose())) {
    throw std::invalid_argument("quadratic_form_generator: M must be symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(M, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  if (lo < -1e-12 * std::max(1.0, hi)) {
    throw std::invalid_argument("quadratic_form_generator: M must be positive semidefinite");
  }
  BregmanGenerator g;
  g.phi = [M](const Block& x) { return (x.transpose() * M * x)(0, 0); };
  g.grad_phi = [M](const Block& x) -> Block { return (M + M.transpose()) * x; };
  g.strong_convexity = 2.0 * std::max(lo, 0.0);
  g.grad_lipschitz = 2.0 * hi;
  g.shape = BlockShape{M.rows(), 1};
  return g;
}

double bregman_distance(const BregmanGenerator& gen, const Block& u, const Block& v) {
  require_same_shape(u, v, "bregman_distance");
  if (gen.shape && !gen.shape->matches(u)) {
    throw DimensionError("bregman_distance: block shape does not match the generator");
  }
  const double d = gen.phi(u) - gen.phi(v) - inner(gen.grad_phi(v), u - v);
  // Round-off can leave a tiny negative value for nearly equal arguments.
  return std::max(d, 0.0);
}

Block soft_shrink(const Block& v, double c) {
  if (!(c >= 0.0)) throw std::invalid_argument("soft_shrink: threshold must be >= 0");
  return v.unaryExpr([c](double t) {
    const double mag = std::abs(t) - c;
    return mag > 0.0 ? std::copysign(mag, t) : 0.0;
  });
}

Block singular_value_shrink(const Block& M, double c) {
  if (!(c >= 0.0)) throw std::invalid_argument("singular_value_shrink: threshold must be >= 0");
  require_finite(M, "singular_value_shrink");
  if (M.size() == 0) return M;
  Eigen::BDCSVD<Eigen::MatrixXd> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& s = svd.singularValues();
  Eigen::Index keep = 0;
  while (keep < s.size() && s(keep) > c) ++keep;
  if (keep == 0) return Block::Zero(M.rows(), M.cols());
  const Eigen::VectorXd shrunk = (s.head(keep).array() - c).matrix();
  return svd.matrixU().leftCols(keep) * shrunk.asDiagonal() *
         svd.matrixV().leftCols(keep).transpose();
}

Block spectral_norm_subgradient(const Block& S) {
  require_finite(S, "spectral_norm_subgradient");
  if (S.size() == 0 || S.isZero(0.0)) return Block::Zero(S.rows(), S.cols());
  Eigen::BDCSVD<Eigen::MatrixXd> svd(S, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return svd.matrixU().col(0) * svd.matrixV().col(0).transpose();
}

double nuclear_norm(const Block& M) {
  if (M.size() == 0) return 0.0;
  Eigen::BDCSVD<Eigen::MatrixXd> svd(M);
  return svd.singularValues().sum();
}

double spectral_norm(const Block& M) {
  if (M.size() == 0) return 0.0;
  Eigen::BDCSVD<Eigen::MatrixXd> svd(M);
  return svd.singularValues()(0);
}

DistSqResult dist_sq_nonneg_orthant(const Eigen::VectorXd& y) {
  if (!y.allFinite()) throw std::invalid_argument("dist_sq_nonneg_orthant: non-finite input");
  const Eigen::VectorXd neg = y.cwiseMin(0.0);
  return {neg.squaredNorm(), 2.0 * neg};
}

}  // namespace bpladmm

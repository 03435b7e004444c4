#include "vevar/kernel.hpp"

#include "vevar/error.hpp"

#include <cmath>

namespace vevar {

void KernelParams::validate() const {
  require(lengthscale > 0.0, "kernel: lengthscale must be positive");
  require(variance > 0.0, "kernel: variance must be positive");
  require(jitter >= 0.0, "kernel: jitter must be nonnegative");
}

double se_kernel(double x, double y, const KernelParams& params) {
  const double d = x - y;
  return params.variance * std::exp(-d * d / (2.0 * params.lengthscale * params.lengthscale));
}

GramMatrix gram(const Eigen::VectorXd& grid, const KernelParams& params) {
  params.validate();
  require(grid.allFinite(), "gram: grid must be finite");
  return gram(grid, SquaredExponential{params}, params.jitter);
}

Eigen::MatrixXd stable_inverse_solve(const GramMatrix& K, const Eigen::MatrixXd& B) {
  require(K.K.rows() == K.K.cols(), "stable_inverse_solve: K must be square");
  require(B.rows() == K.K.rows(), "stable_inverse_solve: dimension mismatch");
  Eigen::LLT<Eigen::MatrixXd> llt(K.K);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("stable_inverse_solve: Cholesky factorization failed; increase jitter");
  }
  Eigen::MatrixXd X = llt.solve(B);
  // One step of iterative refinement tightens the residual on ill-conditioned grids.
  const Eigen::MatrixXd resid = B - K.K * X;
  X += llt.solve(resid);
  if (!X.allFinite()) throw NumericalError("stable_inverse_solve: non-finite solution");
  return X;
}

GramSpectrum::GramSpectrum(const GramMatrix& K) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(K.K);
  if (es.info() != Eigen::Success) {
    throw NumericalError("GramSpectrum: eigendecomposition failed");
  }
  Q_ = es.eigenvectors();
  lambda_ = es.eigenvalues();
  if (lambda_.size() > 0 && lambda_.minCoeff() <= 0.0) {
    throw NumericalError("GramSpectrum: Gram matrix is not positive definite; increase jitter");
  }
  Q2_ = Q_.array().square().matrix();
  log_det_ = lambda_.array().log().sum();
}

Eigen::VectorXd GramSpectrum::posterior_mean(double shift, const Eigen::VectorXd& h) const {
  const Eigen::VectorXd scale = lambda_.array() / (1.0 + shift * lambda_.array());
  return Q_ * (scale.array() * (Q_.transpose() * h).array()).matrix();
}

Eigen::VectorXd GramSpectrum::posterior_variance(double shift) const {
  const Eigen::VectorXd scale = lambda_.array() / (1.0 + shift * lambda_.array());
  return Q2_ * scale;
}

Eigen::MatrixXd GramSpectrum::posterior_covariance(double shift) const {
  const Eigen::VectorXd scale = lambda_.array() / (1.0 + shift * lambda_.array());
  return Q_ * scale.asDiagonal() * Q_.transpose();
}

double GramSpectrum::kl_to_prior(double shift, const Eigen::VectorXd& mean) const {
  const Eigen::ArrayXd dl = shift * lambda_.array();
  const Eigen::ArrayXd c = (Q_.transpose() * mean).array();
  const double trace = (1.0 / (1.0 + dl)).sum();
  const double quad = (c.square() / lambda_.array()).sum();
  const double logdet = (dl).log1p().sum();
  return 0.5 * (trace + quad - static_cast<double>(lambda_.size()) + logdet);
}

}  // namespace vevar

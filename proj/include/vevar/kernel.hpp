#pragma once

#include <Eigen/Dense>

namespace vevar {

struct KernelParams {
  double lengthscale = 0.5;
  double variance = 1.0;
  double jitter = 1e-6;

  void validate() const;
};

/// k(x, y) = variance * exp(-(x - y)^2 / (2 lengthscale^2)).
double se_kernel(double x, double y, const KernelParams& params);

/// Squared-exponential covariance as a callable. Any type with the same call
/// signature can be passed to `gram`.
struct SquaredExponential {
  KernelParams params;
  double operator()(double x, double y) const { return se_kernel(x, y, params); }
};

struct GramMatrix {
  Eigen::MatrixXd K;
  Eigen::VectorXd grid;
};

template <class Kernel>
GramMatrix gram(const Eigen::VectorXd& grid, const Kernel& kernel, double jitter) {
  const Eigen::Index n = grid.size();
  GramMatrix g{Eigen::MatrixXd(n, n), grid};
  for (Eigen::Index i = 0; i < n; ++i) {
    g.K(i, i) = kernel(grid(i), grid(i)) + jitter;
    for (Eigen::Index k = 0; k < i; ++k) {
      const double v = kernel(grid(i), grid(k));
      g.K(i, k) = v;
      g.K(k, i) = v;
    }
  }
  return g;
}

GramMatrix gram(const Eigen::VectorXd& grid, const KernelParams& params);

/// K^{-1} B by Cholesky. Throws NumericalError when K is not numerically
/// positive definite (raise the jitter and retry).
Eigen::MatrixXd stable_inverse_solve(const GramMatrix& K, const Eigen::MatrixXd& B);

/// Spectral factorization K = Q diag(lambda) Q^T of a Gram matrix.
///
/// A Gaussian process prior N(0, K) observed through an isotropic Gaussian
/// term with precision `shift` has posterior covariance
///   (K^{-1} + shift I)^{-1} = Q diag(lambda / (1 + shift lambda)) Q^T,
/// so one factorization serves every posterior over the same grid.
class GramSpectrum {
 public:
  GramSpectrum() = default;
  explicit GramSpectrum(const GramMatrix& K);

  Eigen::Index size() const { return lambda_.size(); }
  const Eigen::MatrixXd& Q() const { return Q_; }
  const Eigen::VectorXd& lambda() const { return lambda_; }
  double log_det() const { return log_det_; }

  /// Posterior mean (K^{-1} + shift I)^{-1} h.
  Eigen::VectorXd posterior_mean(double shift, const Eigen::VectorXd& h) const;
  /// Diagonal of (K^{-1} + shift I)^{-1}.
  Eigen::VectorXd posterior_variance(double shift) const;
  /// Full (K^{-1} + shift I)^{-1}.
  Eigen::MatrixXd posterior_covariance(double shift) const;
  /// KL( N(mean, (K^{-1} + shift I)^{-1}) || N(0, K) ).
  double kl_to_prior(double shift, const Eigen::VectorXd& mean) const;

 private:
  Eigen::MatrixXd Q_;
  Eigen::MatrixXd Q2_;  // elementwise square of Q
  Eigen::VectorXd lambda_;
  double log_det_ = 0.0;
};

}  // namespace vevar

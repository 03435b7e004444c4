#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <vector>

namespace vevar {

/// Parameters of the mean-field family for every group, edge, covariate and subject.
///
/// Indexing: groups g, edges j and covariates p are 0-based. Per-edge arrays are
/// laid out as g*J + j and per-covariate arrays as (g*J + j)*P + p.
///
/// q(phi) over a group's covariate grid is N(phi_mean, (K^{-1} + phi_shift I)^{-1});
/// the covariance is fully determined by the scalar shift and the cached Gram
/// spectrum, so only its diagonal is stored here (phi_var). The full matrix is
/// available from PreparedData::phi_covariance.
///
/// q(w~, s) follows the spike-and-slab reparameterization: q(s=1) = gamma_phi,
/// q(w~ | s=1) = N(omega, sigma_tilde), q(w~ | s=0) = N(0, sigma2_w).
struct VariationalState {
  int R = 0, L = 1, G = 0, P = 0;
  std::vector<int> group_sizes;

  // per (g, j)
  std::vector<double> u_mu, v_mu, gamma_delta;
  // per (g, j, p)
  std::vector<double> omega, sigma_tilde, gamma_phi, phi_shift;
  std::vector<Eigen::VectorXd> phi_mean, phi_var;
  // per subject
  std::vector<Eigen::VectorXd> beta_mean;
  std::vector<std::vector<Eigen::MatrixXd>> beta_cov;  // R blocks of RL x RL, by target
  // per group: q(sigma0) = IG(a0, b0), q(sigma1) = IG(a1, b1)
  std::vector<double> a0, b0, a1, b1;
  // per (g, r): q(xi_r) = IG(z1, z2)
  std::vector<double> z1, z2;

  int J() const { return R * L * R; }
  int RL() const { return R * L; }
  std::size_t edge(int g, int j) const { return static_cast<std::size_t>(g) * J() + j; }
  std::size_t cov(int g, int j, int p) const { return edge(g, j) * P + p; }
  std::size_t noise(int g, int r) const { return static_cast<std::size_t>(g) * R + r; }

  /// E[w] and E[w^2] with w = w~ s.
  double mean_w(std::size_t k) const { return gamma_phi[k] * omega[k]; }
  double second_moment_w(std::size_t k) const {
    return gamma_phi[k] * (omega[k] * omega[k] + sigma_tilde[k]);
  }
  /// Posterior variance of beta_j for subject s.
  double beta_var(int s, int j) const {
    const int rl = RL();
    return beta_cov[s][j / rl](j % rl, j % rl);
  }

  /// Throws NumericalError if any variance, probability or IG parameter is out of range.
  void check_valid() const;
};

/// ELBO value per sweep.
struct ElboTrace {
  std::vector<double> values;
  bool converged = false;
  int sweeps = 0;
};

/// Order in which covariate blocks are visited for each (g, j).
struct UpdateSchedule {
  std::vector<std::vector<int>> covariate_order;  // indexed g*J + j
  int n_cold_starts = 0;
  int cold_start_sweeps = 25;

  static UpdateSchedule ascending(int G, int J, int P);
  /// Throws ValidationError unless every order is a permutation of 0..P-1.
  void validate(int G, int J, int P) const;
};

}  // namespace vevar

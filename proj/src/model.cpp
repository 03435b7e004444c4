#include "vevar/model.hpp"

#include "vevar/error.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace vevar {

int flat_index(CoefficientIndex idx, int R, int L) {
  require(R >= 1 && L >= 1, "flat_index: R and L must be positive");
  require(idx.source >= 1 && idx.source <= R, "flat_index: source out of range");
  require(idx.lag >= 1 && idx.lag <= L, "flat_index: lag out of range");
  require(idx.target >= 1 && idx.target <= R, "flat_index: target out of range");
  return (idx.target - 1) * R * L + (idx.lag - 1) * R + idx.source;
}

CoefficientIndex unflatten(int j, int R, int L) {
  require(R >= 1 && L >= 1, "unflatten: R and L must be positive");
  require(j >= 1 && j <= n_coefficients(R, L), "unflatten: index out of range");
  const int z = j - 1;
  const int RL = R * L;
  return {z % R + 1, (z % RL) / R + 1, z / RL + 1};
}

void ModelConfig::validate() const {
  require(R >= 1, "config: R must be >= 1");
  require(L >= 1, "config: L must be >= 1");
  require(G >= 1, "config: G must be >= 1");
  require(P >= 0, "config: P must be >= 0");
  require(pi_delta > 0.0 && pi_delta < 1.0, "config: pi_delta must lie in (0,1)");
  require(pi_phi > 0.0 && pi_phi < 1.0, "config: pi_phi must lie in (0,1)");
  require(sigma2_w > 0.0 && sigma2_mu > 0.0, "config: slab variances must be positive");
  require(a0 > 0 && b0 > 0 && a1 > 0 && b1 > 0, "config: sigma IG parameters must be positive");
  require(a_xi > 0 && b_xi > 0, "config: xi IG parameters must be positive");
  require(kernel_lengthscale > 0 && kernel_variance > 0, "config: kernel parameters must be positive");
  require(jitter_scale >= 0, "config: jitter must be nonnegative");
}

void validate_subject(const SubjectDataset& subject, int L) {
  const std::string who = "subject " + std::to_string(subject.subject_id) + ": ";
  require(subject.R() >= 1, who + "series has no columns");
  require(subject.T() >= L + 2, who + "series too short");
  require(subject.series.allFinite(), who + "non-finite value in series");
  require(subject.covariates.allFinite(), who + "non-finite covariate");
  require(subject.group >= 1, who + "group label must be >= 1");
}

LaggedDesign build_lagged_design(const SubjectDataset& subject, int L) {
  require(L >= 1, "build_lagged_design: L must be >= 1");
  validate_subject(subject, L);
  const int T = subject.T();
  const int R = subject.R();
  const int n = T - L;
  LaggedDesign d;
  d.U.resize(n, R * L);
  d.X = subject.series.bottomRows(n);
  for (int t = 0; t < n; ++t) {
    // Response row t is time t+L; lag l reads time t+L-l.
    for (int l = 1; l <= L; ++l) {
      d.U.block(t, (l - 1) * R, 1, R) = subject.series.row(t + L - l);
    }
  }
  return d;
}

Eigen::MatrixXd coefficients_to_matrix(const Eigen::VectorXd& beta, int R, int L) {
  require(beta.size() == n_coefficients(R, L), "coefficients_to_matrix: size mismatch");
  return Eigen::Map<const Eigen::MatrixXd>(beta.data(), R * L, R);
}

Eigen::VectorXd matrix_to_coefficients(const Eigen::MatrixXd& B) {
  return Eigen::Map<const Eigen::VectorXd>(B.data(), B.size());
}

double subject_loglik(const LaggedDesign& design, const Eigen::VectorXd& beta,
                      const Eigen::VectorXd& xi) {
  const int R = static_cast<int>(design.X.cols());
  const int RL = static_cast<int>(design.U.cols());
  require(R > 0 && RL % R == 0, "subject_loglik: inconsistent design");
  require(design.U.rows() == design.X.rows(), "subject_loglik: U/X row mismatch");
  require(beta.size() == RL * R, "subject_loglik: beta has wrong length");
  require(xi.size() == R, "subject_loglik: xi has wrong length");
  require((xi.array() > 0).all(), "subject_loglik: xi must be positive");

  const double n = static_cast<double>(design.X.rows());
  const Eigen::MatrixXd B = coefficients_to_matrix(beta, R, RL / R);
  const Eigen::MatrixXd resid = design.X - design.U * B;
  double total = 0.0;
  for (int r = 0; r < R; ++r) {
    total += -0.5 * n * std::log(2.0 * std::numbers::pi * xi(r)) -
             0.5 * resid.col(r).squaredNorm() / xi(r);
  }
  return total;
}

double group_function_eval(double mu, std::span<const double> w,
                           std::span<const std::function<double(double)>> phi,
                           std::span<const double> m) {
  require(w.size() == phi.size() && w.size() == m.size(),
          "group_function_eval: length mismatch");
  double f = mu;
  for (std::size_t p = 0; p < w.size(); ++p) {
    if (w[p] != 0.0) f += w[p] * phi[p](m[p]);
  }
  return f;
}

}  // namespace vevar

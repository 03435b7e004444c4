#pragma once

#include <Eigen/Dense>

#include <functional>
#include <span>
#include <vector>

namespace vevar {

/// One subject's multivariate series together with its covariates and group label.
/// Rows of `series` are time points, columns are nodes (ROIs). `group` is 1-based.
struct SubjectDataset {
  int subject_id = 0;
  Eigen::MatrixXd series;
  Eigen::VectorXd covariates;
  int group = 1;

  int T() const { return static_cast<int>(series.rows()); }
  int R() const { return static_cast<int>(series.cols()); }
  int P() const { return static_cast<int>(covariates.size()); }
};

/// Position of a VAR coefficient: `source` node at `lag` driving `target` node.
/// All components are 1-based.
struct CoefficientIndex {
  int source = 1;
  int lag = 1;
  int target = 1;

  /// Row of the RL x R coefficient matrix B (1-based).
  int row(int R) const { return (lag - 1) * R + source; }
  bool operator==(const CoefficientIndex&) const = default;
};

/// Flat 1-based index j = (target-1)*R*L + (lag-1)*R + source, i.e. column-major vec(B).
int flat_index(CoefficientIndex idx, int R, int L);
CoefficientIndex unflatten(int j, int R, int L);

/// Number of coefficients (RL)R.
inline int n_coefficients(int R, int L) { return R * L * R; }

/// Fixed hyperparameters of the model. Defaults are the simulation-study settings.
struct ModelConfig {
  int R = 0;
  int L = 1;
  int G = 0;
  int P = 0;
  double pi_delta = 0.1;
  double pi_phi = 0.1;
  double sigma2_w = 1.0;
  double sigma2_mu = 1.0;
  double a0 = 2.0, b0 = 1.0;
  double a1 = 2.0, b1 = 1.0;
  double a_xi = 2.0, b_xi = 1.0;
  double kernel_lengthscale = 0.5;
  double kernel_variance = 1.0;
  /// Diagonal jitter relative to kernel_variance.
  double jitter_scale = 1e-6;
  bool intercept_only = false;

  void validate() const;
};

/// Lagged regressors U ((T-L) x RL) and responses X ((T-L) x R).
struct LaggedDesign {
  Eigen::MatrixXd U;
  Eigen::MatrixXd X;
};

/// Throws ValidationError if the subject is unusable with lag L.
void validate_subject(const SubjectDataset& subject, int L);

LaggedDesign build_lagged_design(const SubjectDataset& subject, int L);

/// Reshape a flat coefficient vector into the RL x R matrix B and back.
Eigen::MatrixXd coefficients_to_matrix(const Eigen::VectorXd& beta, int R, int L);
Eigen::VectorXd matrix_to_coefficients(const Eigen::MatrixXd& B);

/// Gaussian log-likelihood of X given U*B with per-column noise variances xi.
double subject_loglik(const LaggedDesign& design, const Eigen::VectorXd& beta,
                      const Eigen::VectorXd& xi);

/// mu + sum_p w_p * phi_p(m_p).
double group_function_eval(double mu, std::span<const double> w,
                           std::span<const std::function<double(double)>> phi,
                           std::span<const double> m);

}  // namespace vevar

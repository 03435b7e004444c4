#pragma once

#include "vevar/model.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace vevar {

struct TTest {
  double t = 0;
  double df = 0;
  double p = 1;
};

/// Two-sided one-sample t-test against zero. Needs at least 3 values.
TTest one_sample_ttest(std::span<const double> x);

/// Welch two-sample t-test (unequal variances), two-sided. Each sample needs at least 3 values.
TTest welch_ttest(std::span<const double> a, std::span<const double> b);

/// Benjamini-Hochberg step-up at level q.
std::vector<bool> fdr_select(std::span<const double> pvalues, double q = 0.05);

/// Per-subject OLS VAR fits followed by per-group t-tests and BH selection.
struct GcResult {
  int G = 0;
  int J = 0;
  Eigen::MatrixXd subject_coefs;  // n x J, input subject order
  std::vector<int> group_of;      // 0-based, per subject
  std::vector<double> pvalues;    // per g*J + j
  std::vector<bool> selected;     // per g*J + j
  std::vector<int> ridge_subjects;  // subject ids fitted with the ridge fallback
};

/// OLS coefficients of one subject as a flat vector; falls back to ridge 1e-6
/// (and sets `ridge`) when the lagged design is rank deficient.
Eigen::VectorXd ols_coefficients(const SubjectDataset& subject, int L, bool& ridge);

GcResult gc_fit(std::span<const SubjectDataset> data, int L, double q = 0.05);

// ---------------------------------------------------------------------------
// LASSO

/// Coordinate descent for (1/2n)|y - Xb|^2 + lambda |b|_1. X columns are
/// expected centred; no intercept is fitted. `start` warm-starts when sized.
Eigen::VectorXd lasso_cd(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double lambda,
                         const Eigen::VectorXd& start = {}, double tol = 1e-10, int max_iter = 100000);

/// Smallest lambda with an all-zero solution: max |X^T y| / n.
double lambda_max(const Eigen::MatrixXd& X, const Eigen::VectorXd& y);

/// `n` log-spaced values from lmax down to min_ratio * lmax.
std::vector<double> lambda_grid(double lmax, int n = 50, double min_ratio = 1e-4);

struct LassoOptions {
  int n_lambda = 50;
  double min_ratio = 1e-4;
  int folds = 5;
  std::uint64_t seed = 0;
};

struct LassoCv {
  Eigen::VectorXd coef;  // on the standardized scale
  double lambda = 0;
  std::vector<double> cv_mse;  // per grid value
};

/// Standardizes X, picks lambda by k-fold CV MSE, refits on all rows.
/// Zero-variance columns get coefficient 0.
LassoCv lasso_cv(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const LassoOptions& options);

struct LassoResult {
  int G = 0, J = 0, P = 0;
  std::vector<Eigen::VectorXd> coefficients;  // per g*J + j, length P
  std::vector<bool> selected;                 // per (g*J + j)*P + p
  std::vector<double> lambda;                 // per g*J + j
  std::vector<std::string> warnings;
};

/// Regresses each edge's subject strengths on the covariates within each group.
LassoResult lasso_covariates(const Eigen::MatrixXd& strengths, const Eigen::MatrixXd& covariates,
                             const std::vector<int>& group_of, int G, const LassoOptions& options = {});

}  // namespace vevar

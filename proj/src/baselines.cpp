#include "vevar/baselines.hpp"

#include "vevar/error.hpp"
#include "vevar/simulator.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace vevar {

namespace {

double two_sided_p(double t, double df) {
  if (!std::isfinite(t)) return 0.0;
  boost::math::students_t dist(df);
  return std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t))));
}

void mean_var(std::span<const double> x, double& mean, double& var) {
  mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
  double ss = 0.0;
  for (double v : x) ss += (v - mean) * (v - mean);
  var = ss / static_cast<double>(x.size() - 1);
}

}  // namespace

TTest one_sample_ttest(std::span<const double> x) {
  require(x.size() >= 3, "t-test needs at least 3 values");
  double mean, var;
  mean_var(x, mean, var);
  TTest out;
  out.df = static_cast<double>(x.size() - 1);
  if (var == 0.0) {
    out.t = mean == 0.0 ? 0.0 : std::copysign(INFINITY, mean);
    out.p = mean == 0.0 ? 1.0 : 0.0;
    return out;
  }
  out.t = mean / std::sqrt(var / static_cast<double>(x.size()));
  out.p = two_sided_p(out.t, out.df);
  return out;
}

TTest welch_ttest(std::span<const double> a, std::span<const double> b) {
  require(a.size() >= 3 && b.size() >= 3, "Welch t-test needs at least 3 values per sample");
  double ma, va, mb, vb;
  mean_var(a, ma, va);
  mean_var(b, mb, vb);
  const double sa = va / static_cast<double>(a.size());
  const double sb = vb / static_cast<double>(b.size());
  TTest out;
  if (sa + sb == 0.0) {
    out.df = static_cast<double>(a.size() + b.size() - 2);
    out.t = ma == mb ? 0.0 : std::copysign(INFINITY, ma - mb);
    out.p = ma == mb ? 1.0 : 0.0;
    return out;
  }
  out.t = (ma - mb) / std::sqrt(sa + sb);
  out.df = (sa + sb) * (sa + sb) /
           (sa * sa / static_cast<double>(a.size() - 1) + sb * sb / static_cast<double>(b.size() - 1));
  out.p = two_sided_p(out.t, out.df);
  return out;
}

std::vector<bool> fdr_select(std::span<const double> pvalues, double q) {
  require(q > 0.0 && q <= 1.0, "fdr level must lie in (0, 1]");
  const std::size_t m = pvalues.size();
  for (double p : pvalues) require(p >= 0.0 && p <= 1.0, "p-values must lie in [0, 1]");
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return pvalues[a] < pvalues[b]; });
  std::size_t k = 0;
  for (std::size_t i = m; i > 0; --i) {
    if (pvalues[order[i - 1]] <= static_cast<double>(i) * q / static_cast<double>(m)) {
      k = i;
      break;
    }
  }
  std::vector<bool> out(m, false);
  for (std::size_t i = 0; i < k; ++i) out[order[i]] = true;
  return out;
}

Eigen::VectorXd ols_coefficients(const SubjectDataset& subject, int L, bool& ridge) {
  const LaggedDesign d = build_lagged_design(subject, L);
  const Eigen::Index RL = d.U.cols();
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(d.U);
  ridge = qr.rank() < RL;
  Eigen::MatrixXd B;
  if (!ridge) {
    B = qr.solve(d.X);
  } else {
    const Eigen::MatrixXd A = d.U.transpose() * d.U + 1e-6 * Eigen::MatrixXd::Identity(RL, RL);
    B = A.ldlt().solve(d.U.transpose() * d.X);
  }
  return matrix_to_coefficients(B);
}

GcResult gc_fit(std::span<const SubjectDataset> data, int L, double q) {
  require(!data.empty(), "no subjects");
  const int R = data.front().R();
  GcResult out;
  out.J = n_coefficients(R, L);
  for (const auto& s : data) out.G = std::max(out.G, s.group);
  const int n = static_cast<int>(data.size());
  out.subject_coefs.resize(n, out.J);
  out.group_of.resize(n);
  std::vector<std::vector<int>> members(out.G);
  for (int s = 0; s < n; ++s) {
    validate_subject(data[s], L);
    require(data[s].R() == R, "subject " + std::to_string(data[s].subject_id) + ": inconsistent R");
    out.group_of[s] = data[s].group - 1;
    members[out.group_of[s]].push_back(s);
  }
  for (int g = 0; g < out.G; ++g) {
    require(members[g].size() >= 3, "group " + std::to_string(g + 1) + " needs at least 3 subjects for t-tests");
  }

  std::vector<char> ridge(n, 0);
#pragma omp parallel for schedule(static)
  for (int s = 0; s < n; ++s) {
    bool r = false;
    out.subject_coefs.row(s) = ols_coefficients(data[s], L, r).transpose();
    ridge[s] = r;
  }
  for (int s = 0; s < n; ++s) {
    if (ridge[s]) out.ridge_subjects.push_back(data[s].subject_id);
  }

  out.pvalues.assign(static_cast<std::size_t>(out.G) * out.J, 1.0);
  out.selected.assign(out.pvalues.size(), false);
  std::vector<double> col;
  for (int g = 0; g < out.G; ++g) {
    for (int j = 0; j < out.J; ++j) {
      col.clear();
      for (int s : members[g]) col.push_back(out.subject_coefs(s, j));
      out.pvalues[static_cast<std::size_t>(g) * out.J + j] = one_sample_ttest(col).p;
    }
    const auto sel = fdr_select(std::span<const double>(out.pvalues).subspan(static_cast<std::size_t>(g) * out.J, out.J), q);
    std::copy(sel.begin(), sel.end(), out.selected.begin() + static_cast<std::ptrdiff_t>(g) * out.J);
  }
  return out;
}

// ---------------------------------------------------------------------------

Eigen::VectorXd lasso_cd(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double lambda,
                         const Eigen::VectorXd& start, double tol, int max_iter) {
  require(X.rows() == y.size(), "lasso: X and y row counts differ");
  require(lambda >= 0.0, "lasso: lambda must be nonnegative");
  const double n = static_cast<double>(X.rows());
  const Eigen::Index P = X.cols();
  Eigen::VectorXd b = start.size() == P ? start : Eigen::VectorXd::Zero(P);
  const Eigen::VectorXd sq = X.colwise().squaredNorm().transpose() / n;
  Eigen::VectorXd resid = y - X * b;
  for (int it = 0; it < max_iter; ++it) {
    double change = 0.0;
    for (Eigen::Index p = 0; p < P; ++p) {
      if (sq(p) == 0.0) {
        b(p) = 0.0;
        continue;
      }
      const double rho = X.col(p).dot(resid) / n + sq(p) * b(p);
      const double next = std::copysign(std::max(std::abs(rho) - lambda, 0.0), rho) / sq(p);
      const double d = next - b(p);
      if (d != 0.0) {
        resid -= d * X.col(p);
        b(p) = next;
        change = std::max(change, std::abs(d) * std::sqrt(sq(p)));
      }
    }
    if (change < tol) break;
  }
  return b;
}

double lambda_max(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  if (X.cols() == 0) return 0.0;
  return (X.transpose() * y).cwiseAbs().maxCoeff() / static_cast<double>(X.rows());
}

std::vector<double> lambda_grid(double lmax, int n, double min_ratio) {
  require(n >= 1 && min_ratio > 0.0 && min_ratio <= 1.0, "lambda grid: bad size or ratio");
  std::vector<double> grid(n);
  if (n == 1) {
    grid[0] = lmax;
    return grid;
  }
  const double step = std::log(min_ratio) / (n - 1);
  for (int i = 0; i < n; ++i) grid[i] = lmax * std::exp(step * i);
  return grid;
}

namespace {

void standardize(Eigen::MatrixXd& X, Eigen::VectorXd& y) {
  for (Eigen::Index p = 0; p < X.cols(); ++p) {
    X.col(p).array() -= X.col(p).mean();
    const double sd = std::sqrt(X.col(p).squaredNorm() / static_cast<double>(X.rows()));
    if (sd > 1e-12) X.col(p) /= sd;
    else X.col(p).setZero();
  }
  y.array() -= y.mean();
}

}  // namespace

LassoCv lasso_cv(const Eigen::MatrixXd& X_in, const Eigen::VectorXd& y_in, const LassoOptions& options) {
  const Eigen::Index n = X_in.rows();
  require(options.folds >= 2 && n >= options.folds, "lasso: need at least as many rows as folds");
  Eigen::MatrixXd X = X_in;
  Eigen::VectorXd y = y_in;
  standardize(X, y);

  LassoCv out;
  const double lmax = lambda_max(X, y);
  if (lmax == 0.0) {
    out.coef = Eigen::VectorXd::Zero(X.cols());
    return out;
  }
  const std::vector<double> grid = lambda_grid(lmax, options.n_lambda, options.min_ratio);

  std::vector<int> fold(n);
  for (Eigen::Index i = 0; i < n; ++i) fold[i] = static_cast<int>(i % options.folds);
  std::mt19937_64 rng(options.seed);
  std::shuffle(fold.begin(), fold.end(), rng);

  out.cv_mse.assign(grid.size(), 0.0);
  for (int k = 0; k < options.folds; ++k) {
    std::vector<Eigen::Index> train, test;
    for (Eigen::Index i = 0; i < n; ++i) (fold[i] == k ? test : train).push_back(i);
    Eigen::MatrixXd Xt = X(train, Eigen::all);
    Eigen::VectorXd yt = y(train);
    const Eigen::RowVectorXd xm = Xt.colwise().mean();
    const double ym = yt.mean();
    Xt.rowwise() -= xm;
    yt.array() -= ym;
    Eigen::VectorXd b;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      b = lasso_cd(Xt, yt, grid[i], b);
      for (Eigen::Index t : test) {
        const double pred = ym + (X.row(t) - xm).dot(b);
        out.cv_mse[i] += (y(t) - pred) * (y(t) - pred);
      }
    }
  }
  const auto best = std::min_element(out.cv_mse.begin(), out.cv_mse.end()) - out.cv_mse.begin();
  out.lambda = grid[best];
  Eigen::VectorXd b;
  for (std::ptrdiff_t i = 0; i <= best; ++i) b = lasso_cd(X, y, grid[i], b);
  out.coef = b;
  for (double& v : out.cv_mse) v /= static_cast<double>(n);
  return out;
}

LassoResult lasso_covariates(const Eigen::MatrixXd& strengths, const Eigen::MatrixXd& covariates,
                             const std::vector<int>& group_of, int G, const LassoOptions& options) {
  const Eigen::Index n = strengths.rows();
  require(covariates.rows() == n && static_cast<Eigen::Index>(group_of.size()) == n,
          "lasso: strengths, covariates and groups disagree on subject count");
  LassoResult out;
  out.G = G;
  out.J = static_cast<int>(strengths.cols());
  out.P = static_cast<int>(covariates.cols());
  std::vector<std::vector<Eigen::Index>> members(G);
  for (Eigen::Index s = 0; s < n; ++s) {
    require(group_of[s] >= 0 && group_of[s] < G, "lasso: group label out of range");
    members[group_of[s]].push_back(s);
  }
  for (int g = 0; g < G; ++g) {
    require(members[g].size() >= 5, "lasso: group " + std::to_string(g + 1) + " needs at least 5 subjects");
    for (int p = 0; p < out.P; ++p) {
      const Eigen::VectorXd c = covariates(members[g], p);
      if ((c.array() - c(0)).abs().maxCoeff() == 0.0) {
        out.warnings.push_back("group " + std::to_string(g + 1) + ": covariate " + std::to_string(p + 1) +
                               " has zero variance and was dropped");
      }
    }
  }

  const std::size_t total = static_cast<std::size_t>(G) * out.J;
  out.coefficients.assign(total, Eigen::VectorXd::Zero(out.P));
  out.lambda.assign(total, 0.0);
  out.selected.assign(total * out.P, false);
#pragma omp parallel for schedule(dynamic, 4)
  for (std::ptrdiff_t e = 0; e < static_cast<std::ptrdiff_t>(total); ++e) {
    const int g = static_cast<int>(e / out.J);
    const int j = static_cast<int>(e % out.J);
    LassoOptions o = options;
    o.seed = derive_seed(options.seed, static_cast<std::uint64_t>(e));
    const LassoCv fit = lasso_cv(covariates(members[g], Eigen::all), strengths(members[g], j), o);
    out.coefficients[e] = fit.coef;
    out.lambda[e] = fit.lambda;
  }
  for (std::size_t e = 0; e < total; ++e) {
    for (int p = 0; p < out.P; ++p) out.selected[e * out.P + p] = out.coefficients[e](p) != 0.0;
  }
  return out;
}

}  // namespace vevar

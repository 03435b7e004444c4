#include "vevar/simulator.hpp"

#include "vevar/error.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

namespace vevar {

int SimConfig::n_subjects() const { return std::accumulate(group_sizes.begin(), group_sizes.end(), 0); }

void SimConfig::validate() const {
  require(R >= 1, "sim: R must be >= 1");
  require(L >= 1, "sim: L must be >= 1");
  require(T >= L + 2, "sim: T must be >= L + 2");
  require(!group_sizes.empty(), "sim: need at least one group");
  for (int n : group_sizes) require(n >= 1, "sim: group sizes must be positive");
  require(P == 6, "sim: the function bank uses exactly 6 covariates");
  require(noise_var > 0 && init_var > 0 && subject_coef_var >= 0, "sim: variances must be positive");
  require(dropout_prob >= 0 && dropout_prob <= 1, "sim: dropout_prob must lie in [0,1]");
  require(sign_flip_prob >= 0 && sign_flip_prob <= 1, "sim: sign_flip_prob must lie in [0,1]");
  require(max_rejections >= 1, "sim: max_rejections must be >= 1");
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  // splitmix64 over the pair
  std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

bool rescale_window(int band, double& lo, double& hi) {
  switch (band) {
    case 2:
    case 3:
    case 4:
      lo = -0.2;
      hi = 0.2;
      return true;
    case 7:
      lo = -0.15;
      hi = 0.35;
      return true;
    default:
      return false;
  }
}

namespace {

// Raw bank function and its exact range over m in [-1, 1].
double raw_value(int band, double m) {
  switch (band) {
    case 2: return std::pow(1.0 + m, 0.40);
    case 3: return m * m;
    case 4: return 0.20 * std::sin(std::numbers::pi * m);
    case 7: return std::pow(1.0 + m, 0.70);
    default: return 0.0;
  }
}

void raw_range(int band, double& lo, double& hi) {
  switch (band) {
    case 2: lo = 0.0; hi = std::pow(2.0, 0.40); return;
    case 3: lo = 0.0; hi = 1.0; return;
    case 4: lo = -0.2; hi = 0.2; return;
    case 7: lo = 0.0; hi = std::pow(2.0, 0.70); return;
    default: lo = 0.0; hi = 1.0;
  }
}

}  // namespace

double BankFunction::unsigned_value(const Eigen::VectorXd& m) const {
  switch (band) {
    case 0: return 0.15;
    case 1: return 0.25 * m(p1);
    case 5: return 0.20 * m(5);
    case 6: return 0.3 * m(p1) - 0.3 * m(p2);
    case 2:
    case 3:
    case 4:
    case 7: {
      double lo, hi, rlo, rhi;
      rescale_window(band, lo, hi);
      raw_range(band, rlo, rhi);
      return lo + (raw_value(band, m(p1)) - rlo) / (rhi - rlo) * (hi - lo);
    }
    default: return 0.0;
  }
}

std::vector<int> BankFunction::covariates() const {
  switch (band) {
    case 1:
    case 2:
    case 3:
    case 4:
    case 7: return {p1};
    case 5: return {5};
    case 6: return {p1, p2};
    default: return {};
  }
}

double SimTruth::group_function(int g, int j, const Eigen::VectorXd& m) const {
  const BankFunction& f = bank[j];
  if (!f.active() || dropped[static_cast<std::size_t>(g) * J() + j]) return 0.0;
  return f.value(m);
}

Eigen::MatrixXd sample_covariates(int n, std::uint64_t seed) {
  require(n >= 1, "sample_covariates: n must be >= 1");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  std::bernoulli_distribution coin(0.5);
  Eigen::MatrixXd m(n, 6);
  for (int i = 0; i < n; ++i) {
    for (int p = 0; p < 5; ++p) m(i, p) = unif(rng);
    m(i, 5) = coin(rng) ? 1.0 : 0.0;
  }
  return m;
}

SimTruth build_group_functions(const SimConfig& sim, std::uint64_t seed) {
  sim.validate();
  SimTruth t;
  t.R = sim.R;
  t.L = sim.L;
  t.G = sim.G();
  t.P = sim.P;
  const int J = t.J();
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick(0, 4);
  std::uniform_int_distribution<int> pick_other(0, 3);
  std::bernoulli_distribution flip(sim.sign_flip_prob);
  std::bernoulli_distribution drop(sim.dropout_prob);

  t.bank.resize(J);
  for (int j = 1; j <= J; ++j) {
    const CoefficientIndex idx = unflatten(j, sim.R, sim.L);
    BankFunction& f = t.bank[j - 1];
    f.band = std::abs(idx.row(sim.R) - idx.target);
    if (!f.active()) continue;
    f.p1 = pick(rng);
    if (f.band == 6) {
      const int other = pick_other(rng);
      f.p2 = other >= f.p1 ? other + 1 : other;
    }
    f.sign = flip(rng) ? -1.0 : 1.0;
  }

  t.dropped.assign(static_cast<std::size_t>(t.G) * J, 0);
  t.true_edges.assign(t.dropped.size(), 0);
  t.true_covariate_effects.assign(t.dropped.size() * t.P, 0);
  for (int g = 0; g < t.G; ++g) {
    for (int j = 0; j < J; ++j) {
      const std::size_t e = static_cast<std::size_t>(g) * J + j;
      const BankFunction& f = t.bank[j];
      if (!f.active()) continue;
      t.dropped[e] = drop(rng) ? 1 : 0;
      if (t.dropped[e]) continue;
      t.true_edges[e] = 1;
      for (int p : f.covariates()) t.true_covariate_effects[e * t.P + p] = 1;
    }
  }
  return t;
}

Eigen::VectorXd sample_subject_coefs(const SimTruth& truth, int g, const Eigen::VectorXd& m,
                                     const SimConfig& sim, std::mt19937_64& rng) {
  std::normal_distribution<double> noise(0.0, std::sqrt(sim.subject_coef_var));
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(truth.J());
  for (int j = 0; j < truth.J(); ++j) {
    if (!truth.bank[j].active()) continue;
    beta(j) = truth.group_function(g, j, m) + noise(rng);
  }
  return beta;
}

bool is_stationary(const Eigen::MatrixXd& B, int L) {
  require(L >= 1 && B.cols() >= 1 && B.rows() == B.cols() * L, "is_stationary: B must be RL x R");
  const Eigen::Index R = B.cols();
  const Eigen::Index RL = B.rows();
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(RL, RL);
  C.leftCols(R) = B;
  for (Eigen::Index l = 1; l < L; ++l) C.block((l - 1) * R, l * R, R, R).setIdentity();
  Eigen::EigenSolver<Eigen::MatrixXd> es(C, false);
  if (es.info() != Eigen::Success) throw NumericalError("is_stationary: eigenvalue computation failed");
  return es.eigenvalues().cwiseAbs().maxCoeff() < 1.0;
}

Eigen::MatrixXd generate_series(const Eigen::MatrixXd& B, const SimConfig& sim, std::mt19937_64& rng,
                                bool with_noise) {
  const int R = static_cast<int>(B.cols());
  const int L = sim.L;
  require(B.rows() == R * L, "generate_series: B must be RL x R");
  require(sim.T >= L + 1, "generate_series: T too short");
  std::normal_distribution<double> init(0.0, std::sqrt(sim.init_var));
  std::normal_distribution<double> noise(0.0, std::sqrt(sim.noise_var));
  Eigen::MatrixXd x(sim.T, R);
  for (int t = 0; t < L; ++t) {
    for (int r = 0; r < R; ++r) x(t, r) = init(rng);
  }
  Eigen::RowVectorXd u(R * L);
  for (int t = L; t < sim.T; ++t) {
    for (int l = 1; l <= L; ++l) u.segment((l - 1) * R, R) = x.row(t - l);
    x.row(t) = u * B;
    if (with_noise) {
      for (int r = 0; r < R; ++r) x(t, r) += noise(rng);
    }
  }
  return x;
}

Study simulate_study(const SimConfig& sim) {
  sim.validate();
  Study study;
  study.truth = build_group_functions(sim, derive_seed(sim.seed, 1));
  const int n = sim.n_subjects();
  const Eigen::MatrixXd cov = sample_covariates(n, derive_seed(sim.seed, 2));
  study.truth.subject_coefs.resize(n, study.truth.J());
  study.subjects.resize(n);

  std::vector<int> group_of(n);
  for (int g = 0, s = 0; g < sim.G(); ++g) {
    for (int i = 0; i < sim.group_sizes[g]; ++i) group_of[s++] = g;
  }

  for (int s = 0; s < n; ++s) {
    std::mt19937_64 rng(derive_seed(sim.seed, 100 + static_cast<std::uint64_t>(s)));
    const Eigen::VectorXd m = cov.row(s).transpose();
    Eigen::VectorXd beta;
    int tries = 0;
    for (;;) {
      beta = sample_subject_coefs(study.truth, group_of[s], m, sim, rng);
      if (is_stationary(coefficients_to_matrix(beta, sim.R, sim.L), sim.L)) break;
      if (++tries >= sim.max_rejections) {
        throw NumericalError("simulate_study: subject " + std::to_string(s + 1) + " rejected " +
                             std::to_string(tries) + " consecutive non-stationary draws");
      }
    }
    study.truth.subject_coefs.row(s) = beta.transpose();
    SubjectDataset& d = study.subjects[s];
    d.subject_id = s + 1;
    d.group = group_of[s] + 1;
    d.covariates = m;
    d.series = generate_series(coefficients_to_matrix(beta, sim.R, sim.L), sim, rng);
  }
  return study;
}

}  // namespace vevar

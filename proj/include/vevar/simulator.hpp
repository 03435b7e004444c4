#pragma once

#include "vevar/model.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <vector>

namespace vevar {

struct SimConfig {
  int R = 10;
  int L = 1;
  int T = 200;
  std::vector<int> group_sizes{30, 60};
  int P = 6;
  double noise_var = 0.5;
  double init_var = 0.25;
  double subject_coef_var = 0.0064;  // 0.08 standard deviation
  double dropout_prob = 0.2;
  double sign_flip_prob = 0.5;
  std::uint64_t seed = 1;
  int max_rejections = 1000;

  int G() const { return static_cast<int>(group_sizes.size()); }
  int n_subjects() const;
  void validate() const;
};

/// Derives an independent 64-bit seed for stream `stream` of a master seed.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);

/// One entry of the banded function bank. `band` is |row - col| of the B
/// entry; bands above 7 carry no function. Covariate indices are 0-based.
struct BankFunction {
  int band = -1;
  int p1 = -1;
  int p2 = -1;
  double sign = 1.0;

  bool active() const { return band >= 0 && band <= 7; }
  /// Function value before the sign flip (rescaling applied).
  double unsigned_value(const Eigen::VectorXd& m) const;
  double value(const Eigen::VectorXd& m) const { return sign * unsigned_value(m); }
  /// Covariates the function depends on.
  std::vector<int> covariates() const;
};

/// Affine window used to rescale bands 2, 3, 4 and 7; returns false for bands
/// used as written.
bool rescale_window(int band, double& lo, double& hi);

struct SimTruth {
  int R = 0, L = 1, G = 0, P = 0;
  std::vector<BankFunction> bank;     // per j (0-based), shared by groups
  std::vector<std::uint8_t> dropped;  // per g*J + j
  std::vector<std::uint8_t> true_edges;              // per g*J + j
  std::vector<std::uint8_t> true_covariate_effects;  // per (g*J + j)*P + p
  Eigen::MatrixXd subject_coefs;      // n x J

  int J() const { return R * L * R; }
  int band(int j) const { return bank[j].band; }
  /// True group-level coefficient of edge j in group g (0-based) at covariates m.
  double group_function(int g, int j, const Eigen::VectorXd& m) const;
};

/// n x 6: five uniform(-1,1) columns then one Bernoulli(0.5) column.
Eigen::MatrixXd sample_covariates(int n, std::uint64_t seed);

/// Function bank and per-group dropout.
SimTruth build_group_functions(const SimConfig& sim, std::uint64_t seed);

/// One subject's coefficients: N(f(m), subject_coef_var) on active entries, 0 elsewhere.
Eigen::VectorXd sample_subject_coefs(const SimTruth& truth, int g, const Eigen::VectorXd& m,
                                     const SimConfig& sim, std::mt19937_64& rng);

/// Spectral radius of the VAR companion matrix is below one. B is RL x R.
bool is_stationary(const Eigen::MatrixXd& B, int L);

/// T x R series: first L rows from N(0, init_var I), then x_t = u_t B + e_t.
Eigen::MatrixXd generate_series(const Eigen::MatrixXd& B, const SimConfig& sim, std::mt19937_64& rng,
                                bool with_noise = true);

struct Study {
  std::vector<SubjectDataset> subjects;
  SimTruth truth;
};

/// The whole protocol: covariates, function bank, per-subject coefficients
/// (redrawn until stationary) and series.
Study simulate_study(const SimConfig& sim);

}  // namespace vevar

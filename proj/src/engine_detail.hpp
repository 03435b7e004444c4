#pragma once

#include "vevar/engine.hpp"

#include <cmath>
#include <numbers>

namespace vevar::detail {

inline constexpr double kLog2Pi = 1.8378770664093453;  // log(2 pi)

inline double logit(double p) { return std::log(p) - std::log1p(-p); }

inline double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

/// p log(p/q) with 0 log 0 = 0.
inline double xlogy_ratio(double p, double q) { return p > 0 ? p * std::log(p / q) : 0.0; }

/// E log Bernoulli(prior) + H[Bernoulli(gamma)] = -KL(gamma || prior).
inline double bernoulli_term(double gamma, double prior) {
  return -(xlogy_ratio(gamma, prior) + xlogy_ratio(1.0 - gamma, 1.0 - prior));
}

/// E_q log IG(x; a, b) + H[q] for q = IG(qa, qb).
double inverse_gamma_term(double a, double b, double qa, double qb);

/// E_q log N(x; 0, prior_var) + H[q] for q = N(mean, var).
inline double gaussian_term(double mean, double var, double prior_var) {
  return -0.5 * (kLog2Pi + std::log(prior_var)) - 0.5 * (mean * mean + var) / prior_var +
         0.5 * (kLog2Pi + 1.0 + std::log(var));
}

/// E[f] and Var[f] of one edge's group function at every subject of group g.
void edge_function_moments(const PreparedData& data, const VariationalState& state, int g, int j,
                           Eigen::VectorXd& f_mean, Eigen::VectorXd& f_var);

/// ELBO contributions of one subject: likelihood and q(beta) entropy.
struct SubjectTerms {
  double likelihood = 0;
  double entropy = 0;
};
SubjectTerms subject_terms(const PreparedData& data, const VariationalState& state, int s);

/// ELBO contributions that belong to one edge (g, j).
struct EdgeTerms {
  double subject_prior = 0;
  double mu = 0;
  double delta = 0;
  double w = 0;
  double phi = 0;
};
EdgeTerms edge_terms(const PreparedData& data, const VariationalState& state, const Moments& m, int g,
                     int j);

}  // namespace vevar::detail

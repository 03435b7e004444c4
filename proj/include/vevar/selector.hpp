#pragma once

#include "vevar/engine.hpp"

#include <vector>

namespace vevar {

/// Edge (g, j) is selected iff gamma_delta > threshold (strict).
std::vector<bool> select_edges(const VariationalState& state, double threshold = 0.5);

/// Covariate (g, j, p) is selected iff gamma_phi > threshold (strict). Raw, not
/// gated by the edge decision.
std::vector<bool> select_covariates(const VariationalState& state, double threshold = 0.5);

struct GroupFunctionEstimate {
  Eigen::VectorXd values;  // over the group's subjects, in group order
  bool selected = true;    // false: edge not selected, values are zero
};

/// u_mu + sum_p gamma_phi * omega * phi_mean on the group's covariate grid.
GroupFunctionEstimate estimate_group_function(const VariationalState& state, int g, int j,
                                              double threshold = 0.5);

/// Subject-level strengths: n x J matrix of q(beta) means.
Eigen::MatrixXd estimate_subject_strengths(const VariationalState& state);

/// Everything reported after a fit.
struct FitResult {
  std::vector<bool> edges;               // per g*J + j
  std::vector<bool> covariate_effects;   // per (g*J + j)*P + p, gated by edges
  std::vector<double> gamma_delta;
  std::vector<double> gamma_phi;         // raw
  std::vector<Eigen::VectorXd> group_functions;  // per g*J + j, zero where unselected
  Eigen::MatrixXd subject_strengths;
  ElboTrace elbo_trace;
  ModelConfig config_echo;
};

FitResult summarize_fit(const PreparedData& data, const FitOutput& fit, double edge_threshold = 0.5,
                        double covariate_threshold = 0.5);

/// Posterior-mean interpolation of covariate p's component for edge (g, j) at
/// new points: u_mu + gamma_phi * omega * k(x, grid) K^{-1} phi_mean.
Eigen::VectorXd group_function_curve(const PreparedData& data, const VariationalState& state, int g, int j,
                                     int p, const Eigen::VectorXd& points);

}  // namespace vevar

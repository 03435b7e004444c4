#include "vevar/selector.hpp"

#include "vevar/error.hpp"

namespace vevar {

std::vector<bool> select_edges(const VariationalState& state, double threshold) {
  std::vector<bool> out(state.gamma_delta.size());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = state.gamma_delta[k] > threshold;
  return out;
}

std::vector<bool> select_covariates(const VariationalState& state, double threshold) {
  std::vector<bool> out(state.gamma_phi.size());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = state.gamma_phi[k] > threshold;
  return out;
}

GroupFunctionEstimate estimate_group_function(const VariationalState& state, int g, int j,
                                              double threshold) {
  const std::size_t e = state.edge(g, j);
  const int n = state.group_sizes[g];
  GroupFunctionEstimate est;
  if (!(state.gamma_delta[e] > threshold)) {
    est.values = Eigen::VectorXd::Zero(n);
    est.selected = false;
    return est;
  }
  est.values = Eigen::VectorXd::Constant(n, state.u_mu[e]);
  for (int p = 0; p < state.P; ++p) {
    const std::size_t k = state.cov(g, j, p);
    const double weight = state.gamma_phi[k] * state.omega[k];
    if (weight != 0.0) est.values += weight * state.phi_mean[k];
  }
  return est;
}

Eigen::MatrixXd estimate_subject_strengths(const VariationalState& state) {
  const int n = static_cast<int>(state.beta_mean.size());
  Eigen::MatrixXd out(n, state.J());
  for (int s = 0; s < n; ++s) out.row(s) = state.beta_mean[s].transpose();
  return out;
}

FitResult summarize_fit(const PreparedData& data, const FitOutput& fit, double edge_threshold,
                        double covariate_threshold) {
  const VariationalState& st = fit.state;
  FitResult r;
  r.edges = select_edges(st, edge_threshold);
  r.covariate_effects = select_covariates(st, covariate_threshold);
  if (data.config().intercept_only) r.covariate_effects.assign(r.covariate_effects.size(), false);
  for (std::size_t k = 0; k < r.covariate_effects.size(); ++k) {
    if (!r.edges[k / st.P]) r.covariate_effects[k] = false;
  }
  r.gamma_delta = st.gamma_delta;
  r.gamma_phi = st.gamma_phi;
  r.group_functions.resize(r.edges.size());
  for (int g = 0; g < st.G; ++g) {
    for (int j = 0; j < st.J(); ++j) {
      r.group_functions[st.edge(g, j)] = estimate_group_function(st, g, j, edge_threshold).values;
    }
  }
  r.subject_strengths = estimate_subject_strengths(st);
  r.elbo_trace = fit.trace;
  r.config_echo = data.config();
  return r;
}

Eigen::VectorXd group_function_curve(const PreparedData& data, const VariationalState& state, int g, int j,
                                     int p, const Eigen::VectorXd& points) {
  require(!data.config().intercept_only, "group_function_curve: no covariate component in intercept-only mode");
  const std::size_t k = state.cov(g, j, p);
  const KernelParams kp = data.kernel_params();
  const GramMatrix K = gram(data.grid(g, p), kp);
  const Eigen::VectorXd alpha = stable_inverse_solve(K, state.phi_mean[k]);
  Eigen::MatrixXd cross(points.size(), K.grid.size());
  for (Eigen::Index a = 0; a < points.size(); ++a) {
    for (Eigen::Index b = 0; b < K.grid.size(); ++b) cross(a, b) = se_kernel(points(a), K.grid(b), kp);
  }
  Eigen::VectorXd out = cross * alpha;
  out *= state.gamma_phi[k] * state.omega[k];
  out.array() += state.u_mu[state.edge(g, j)];
  return out;
}

}  // namespace vevar

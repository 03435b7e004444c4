#include "vevar/engine.hpp"

#include "engine_detail.hpp"
#include "vevar/error.hpp"
#include "vevar/kernels.hpp"

#include <boost/math/special_functions/digamma.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace vevar {

// ---------------------------------------------------------------------------
// PreparedData

PreparedData::PreparedData(std::span<const SubjectDataset> data, ModelConfig config)
    : config_(std::move(config)) {
  require(!data.empty(), "no subjects");
  const int R = data.front().R();
  const int P = data.front().P();
  int G = 0;
  for (const auto& s : data) G = std::max(G, s.group);
  if (config_.R == 0) config_.R = R;
  if (config_.P == 0) config_.P = P;
  if (config_.G == 0) config_.G = G;
  require(config_.R == R, "config R does not match the data");
  require(config_.P == P, "config P does not match the data");
  require(config_.G >= G, "group label exceeds config G");
  config_.validate();

  const int L = config_.L;
  members_.assign(config_.G, {});
  subjects_.reserve(data.size());
  for (const auto& s : data) {
    validate_subject(s, L);
    require(s.R() == R, "subject " + std::to_string(s.subject_id) + ": inconsistent R");
    require(s.P() == P, "subject " + std::to_string(s.subject_id) + ": inconsistent P");
    const LaggedDesign d = build_lagged_design(s, L);
    SubjectStats st;
    st.subject_id = s.subject_id;
    st.group = s.group - 1;
    st.pos = static_cast<int>(members_[st.group].size());
    st.n_obs = static_cast<int>(d.X.rows());
    st.UtU = d.U.transpose() * d.U;
    st.UtX = d.U.transpose() * d.X;
    st.XtX = d.X.colwise().squaredNorm().transpose();
    st.covariates = s.covariates;
    members_[st.group].push_back(static_cast<int>(subjects_.size()));
    subjects_.push_back(std::move(st));
  }
  for (int g = 0; g < config_.G; ++g) {
    require(!members_[g].empty(), "group " + std::to_string(g + 1) + " has no subjects");
  }

  if (!config_.intercept_only) {
    const KernelParams kp = kernel_params();
    grids_.resize(static_cast<std::size_t>(config_.G) * P);
    spectra_.resize(grids_.size());
    for (int g = 0; g < config_.G; ++g) {
      for (int p = 0; p < P; ++p) {
        Eigen::VectorXd grid(group_size(g));
        for (int i = 0; i < group_size(g); ++i) grid(i) = subjects_[members_[g][i]].covariates(p);
        spectra_[g * P + p] = GramSpectrum(gram(grid, kp));
        grids_[g * P + p] = std::move(grid);
      }
    }
  }
}

KernelParams PreparedData::kernel_params() const {
  return {config_.kernel_lengthscale, config_.kernel_variance,
          config_.jitter_scale * config_.kernel_variance};
}

Eigen::MatrixXd PreparedData::phi_covariance(const VariationalState& state, int g, int j, int p) const {
  return spectrum(g, p).posterior_covariance(state.phi_shift[state.cov(g, j, p)]);
}

InvGammaMoments ig_moments(double shape, double rate) {
  return {shape / rate, std::log(rate) - boost::math::digamma(shape)};
}

// ---------------------------------------------------------------------------
// Moments

void Moments::gather_beta(const PreparedData& data, const VariationalState& state) {
  const int J = data.J();
  beta_mean.resize(data.G());
  beta_second.resize(data.G());
  for (int g = 0; g < data.G(); ++g) {
    const auto& mem = data.members(g);
    beta_mean[g].resize(static_cast<Eigen::Index>(mem.size()), J);
    beta_second[g].resize(static_cast<Eigen::Index>(mem.size()), J);
    for (std::size_t i = 0; i < mem.size(); ++i) {
      const int s = mem[i];
      for (int j = 0; j < J; ++j) {
        const double b = state.beta_mean[s](j);
        beta_mean[g](i, j) = b;
        beta_second[g](i, j) = b * b + state.beta_var(s, j);
      }
    }
  }
}

void Moments::gather_functions(const PreparedData& data, const VariationalState& state) {
  kernels::gather_functions(data, state, *this, kernels::Exec::Serial);
}

namespace detail {

double inverse_gamma_term(double a, double b, double qa, double qb) {
  const InvGammaMoments mo = ig_moments(qa, qb);
  const double expected_log_p = a * std::log(b) - std::lgamma(a) - (a + 1.0) * mo.mean_log - b * mo.mean_inv;
  const double entropy = qa + std::log(qb) + std::lgamma(qa) - (1.0 + qa) * boost::math::digamma(qa);
  return expected_log_p + entropy;
}

void edge_function_moments(const PreparedData& data, const VariationalState& state, int g, int j,
                           Eigen::VectorXd& f_mean, Eigen::VectorXd& f_var) {
  const int n = data.group_size(g);
  const std::size_t e = state.edge(g, j);
  f_mean.setConstant(n, state.u_mu[e]);
  f_var.setConstant(n, state.v_mu[e]);
  if (data.config().intercept_only) return;
  for (int p = 0; p < data.P(); ++p) {
    const std::size_t k = state.cov(g, j, p);
    const double ew = state.mean_w(k);
    const double ew2 = state.second_moment_w(k);
    const auto& pm = state.phi_mean[k].array();
    f_mean.array() += ew * pm;
    f_var.array() += ew2 * (pm.square() + state.phi_var[k].array()) - ew * ew * pm.square();
  }
}

SubjectTerms subject_terms(const PreparedData& data, const VariationalState& state, int s) {
  const SubjectStats& st = data.subject(s);
  const int RL = data.RL();
  SubjectTerms out;
  for (int r = 0; r < data.R(); ++r) {
    const InvGammaMoments xi = ig_moments(state.z1[state.noise(st.group, r)], state.z2[state.noise(st.group, r)]);
    const auto b = state.beta_mean[s].segment(r * RL, RL);
    const Eigen::MatrixXd& S = state.beta_cov[s][r];
    const double rss = st.XtX(r) - 2.0 * b.dot(st.UtX.col(r)) + b.dot(st.UtU * b) +
                       (st.UtU.cwiseProduct(S)).sum();
    out.likelihood += -0.5 * st.n_obs * (kLog2Pi + xi.mean_log) - 0.5 * xi.mean_inv * rss;
    Eigen::LLT<Eigen::MatrixXd> llt(S);
    if (llt.info() != Eigen::Success) {
      throw NumericalError("q(beta) covariance lost positive definiteness for subject " +
                           std::to_string(st.subject_id));
    }
    const double logdet = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
    out.entropy += 0.5 * (RL * (kLog2Pi + 1.0) + logdet);
  }
  return out;
}

EdgeTerms edge_terms(const PreparedData& data, const VariationalState& state, const Moments& m, int g,
                     int j) {
  const ModelConfig& cfg = data.config();
  const std::size_t e = state.edge(g, j);
  const InvGammaMoments s1 = ig_moments(state.a1[g], state.b1[g]);
  const InvGammaMoments s0 = ig_moments(state.a0[g], state.b0[g]);
  const double gd = state.gamma_delta[e];
  const int n = data.group_size(g);

  const auto eb = m.beta_mean[g].col(j).array();
  const auto eb2 = m.beta_second[g].col(j).array();
  const auto ef = m.f_mean[g].col(j).array();
  const auto vf = m.f_var[g].col(j).array();
  const double sq_on = (eb2 - 2.0 * eb * ef + ef.square() + vf).sum();
  const double sq_off = eb2.sum();

  EdgeTerms t;
  t.subject_prior = gd * (-0.5 * n * (kLog2Pi + s1.mean_log) - 0.5 * s1.mean_inv * sq_on) +
                    (1.0 - gd) * (-0.5 * n * (kLog2Pi + s0.mean_log) - 0.5 * s0.mean_inv * sq_off);
  t.mu = gaussian_term(state.u_mu[e], state.v_mu[e], cfg.sigma2_mu);
  t.delta = bernoulli_term(gd, cfg.pi_delta);
  if (!cfg.intercept_only) {
    for (int p = 0; p < data.P(); ++p) {
      const std::size_t k = state.cov(g, j, p);
      t.w += state.gamma_phi[k] * gaussian_term(state.omega[k], state.sigma_tilde[k], cfg.sigma2_w) +
             bernoulli_term(state.gamma_phi[k], cfg.pi_phi);
      t.phi -= data.spectrum(g, p).kl_to_prior(state.phi_shift[k], state.phi_mean[k]);
    }
  }
  return t;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Initialization and ELBO

namespace {

// Both dispersion factors start at the within-group spread of the ridge estimates,
// worth half the group's coefficient count in pseudo-observations.
void init_scales(const PreparedData& data, VariationalState& st) {
  const ModelConfig& cfg = data.config();
  const int J = st.J();
  for (int g = 0; g < cfg.G; ++g) {
    double spread = 0.0;
    for (int s : data.members(g)) {
      for (int j = 0; j < J; ++j) {
        const double d = st.beta_mean[s](j) - st.u_mu[st.edge(g, j)];
        spread += d * d;
      }
    }
    const double n = static_cast<double>(data.group_size(g)) * J;
    spread = std::max(spread / n, 1e-8);
    st.a0[g] = cfg.a0 + 0.25 * n;
    st.b0[g] = (st.a0[g] - 1.0) * spread;
    st.a1[g] = cfg.a1 + 0.25 * n;
    st.b1[g] = (st.a1[g] - 1.0) * spread;
  }
}

}  // namespace

VariationalState init_state(const PreparedData& data, std::uint64_t /*seed*/, InitMode mode) {
  const ModelConfig& cfg = data.config();
  const bool from_prior = mode == InitMode::Prior;
  VariationalState st;
  st.R = cfg.R;
  st.L = cfg.L;
  st.G = cfg.G;
  st.P = cfg.P;
  const int J = st.J();
  const int RL = st.RL();
  for (int g = 0; g < cfg.G; ++g) st.group_sizes.push_back(data.group_size(g));

  const std::size_t n_edges = static_cast<std::size_t>(cfg.G) * J;
  const std::size_t n_cov = n_edges * cfg.P;
  st.u_mu.assign(n_edges, 0.0);
  st.v_mu.assign(n_edges, cfg.sigma2_mu);
  st.gamma_delta.assign(n_edges, from_prior ? cfg.pi_delta : 1.0);

  const bool covariates = !cfg.intercept_only;
  // A nonzero slab mean breaks the w~ = 0, phi = 0 fixed point of the product w * phi.
  st.omega.assign(n_cov, covariates ? std::sqrt(cfg.sigma2_w) : 0.0);
  st.sigma_tilde.assign(n_cov, 1e-2 * cfg.sigma2_w);
  st.gamma_phi.assign(n_cov, covariates ? (from_prior ? cfg.pi_phi : 1.0) : 0.0);
  st.phi_shift.assign(n_cov, 0.0);
  st.phi_mean.resize(n_cov);
  st.phi_var.resize(n_cov);
  const double prior_var = cfg.kernel_variance * (1.0 + cfg.jitter_scale);
  for (int g = 0; g < cfg.G; ++g) {
    for (std::size_t k = static_cast<std::size_t>(g) * J * cfg.P; k < static_cast<std::size_t>(g + 1) * J * cfg.P; ++k) {
      st.phi_mean[k] = Eigen::VectorXd::Zero(data.group_size(g));
      st.phi_var[k] = Eigen::VectorXd::Constant(data.group_size(g), prior_var);
    }
  }

  st.a0.assign(cfg.G, cfg.a0);
  st.b0.assign(cfg.G, cfg.b0);
  st.a1.assign(cfg.G, cfg.a1);
  st.b1.assign(cfg.G, cfg.b1);
  st.z1.assign(static_cast<std::size_t>(cfg.G) * cfg.R, cfg.a_xi);
  st.z2.assign(static_cast<std::size_t>(cfg.G) * cfg.R, cfg.b_xi);

  const double ridge = 1e-3;
  const double xi_inv = cfg.a_xi / cfg.b_xi;
  const double gd0 = st.gamma_delta.front();
  const double tau = gd0 * cfg.a1 / cfg.b1 + (1.0 - gd0) * cfg.a0 / cfg.b0;
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(RL, RL);
  st.beta_mean.resize(data.n_subjects());
  st.beta_cov.resize(data.n_subjects());
  for (int s = 0; s < data.n_subjects(); ++s) {
    const SubjectStats& sub = data.subject(s);
    Eigen::LDLT<Eigen::MatrixXd> ridge_fac(sub.UtU + ridge * I);
    if (ridge_fac.info() != Eigen::Success) {
      throw ValidationError("degenerate design for subject " + std::to_string(sub.subject_id));
    }
    const Eigen::MatrixXd B = ridge_fac.solve(sub.UtX);
    st.beta_mean[s] = matrix_to_coefficients(B);
    Eigen::LLT<Eigen::MatrixXd> prec(xi_inv * sub.UtU + tau * I);
    const Eigen::MatrixXd S = prec.solve(I);
    st.beta_cov[s].assign(cfg.R, S);
  }
  for (int g = 0; g < cfg.G; ++g) {
    for (int j = 0; j < J; ++j) {
      double sum = 0.0;
      for (int s : data.members(g)) sum += st.beta_mean[s](j);
      st.u_mu[st.edge(g, j)] = sum / data.group_size(g);
    }
  }
  if (!from_prior) init_scales(data, st);
  return st;
}

ElboTerms compute_elbo_terms(const PreparedData& data, const VariationalState& state, bool parallel) {
  const ModelConfig& cfg = data.config();
  const kernels::Exec exec = kernels::exec_for(parallel);
  ElboTerms t;
  kernels::subject_elbo(data, state, t, exec);
  Moments m;
  m.gather_beta(data, state);
  kernels::gather_functions(data, state, m, exec);
  kernels::edge_elbo(data, state, m, t, exec);
  for (int g = 0; g < cfg.G; ++g) {
    t.sigma += detail::inverse_gamma_term(cfg.a0, cfg.b0, state.a0[g], state.b0[g]);
    t.sigma += detail::inverse_gamma_term(cfg.a1, cfg.b1, state.a1[g], state.b1[g]);
    for (int r = 0; r < cfg.R; ++r) {
      t.xi += detail::inverse_gamma_term(cfg.a_xi, cfg.b_xi, state.z1[state.noise(g, r)],
                                         state.z2[state.noise(g, r)]);
    }
  }
  const double total = t.total();
  if (!std::isfinite(total)) {
    std::string which = !std::isfinite(t.likelihood)      ? "likelihood"
                        : !std::isfinite(t.subject_prior) ? "subject prior"
                        : !std::isfinite(t.beta_entropy)  ? "q(beta)"
                        : !std::isfinite(t.mu)            ? "q(mu)"
                        : !std::isfinite(t.delta)         ? "q(delta)"
                        : !std::isfinite(t.w)             ? "q(w,s)"
                        : !std::isfinite(t.phi)           ? "q(phi)"
                        : !std::isfinite(t.sigma)         ? "q(sigma)"
                                                          : "q(xi)";
    throw NumericalError("non-finite ELBO in block " + which);
  }
  return t;
}

double compute_elbo(const PreparedData& data, const VariationalState& state, bool parallel) {
  return compute_elbo_terms(data, state, parallel).total();
}

// ---------------------------------------------------------------------------
// Block updates

namespace blocks {

void update_beta(const PreparedData& data, VariationalState& state, const Moments& m, int s) {
  const SubjectStats& st = data.subject(s);
  const int g = st.group;
  const int RL = data.RL();
  const InvGammaMoments s1 = ig_moments(state.a1[g], state.b1[g]);
  const InvGammaMoments s0 = ig_moments(state.a0[g], state.b0[g]);
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(RL, RL);
  for (int r = 0; r < data.R(); ++r) {
    const double xi_inv = state.z1[state.noise(g, r)] / state.z2[state.noise(g, r)];
    Eigen::MatrixXd prec = xi_inv * st.UtU;
    Eigen::VectorXd lin = xi_inv * st.UtX.col(r);
    for (int k = 0; k < RL; ++k) {
      const int j = r * RL + k;
      const double gd = state.gamma_delta[state.edge(g, j)];
      prec(k, k) += gd * s1.mean_inv + (1.0 - gd) * s0.mean_inv;
      lin(k) += gd * s1.mean_inv * m.f_mean[g](st.pos, j);
    }
    Eigen::LLT<Eigen::MatrixXd> llt(prec);
    if (llt.info() != Eigen::Success) {
      throw NumericalError("q(beta) precision not positive definite for subject " +
                           std::to_string(st.subject_id));
    }
    state.beta_cov[s][r] = llt.solve(I);
    state.beta_mean[s].segment(r * RL, RL) = llt.solve(lin);
  }
}

namespace {

struct EdgeScratch {
  double c;  // gamma_delta * E[1/sigma1]
  Eigen::VectorXd f_mean;
};

EdgeScratch edge_scratch(const PreparedData& data, const VariationalState& state, int g, int j) {
  EdgeScratch es;
  es.c = state.gamma_delta[state.edge(g, j)] * state.a1[g] / state.b1[g];
  Eigen::VectorXd fv;
  detail::edge_function_moments(data, state, g, j, es.f_mean, fv);
  return es;
}

void phi_step(const PreparedData& data, VariationalState& state, const Moments& m, EdgeScratch& es, int g,
              int j, int p) {
  const std::size_t k = state.cov(g, j, p);
  const double ew = state.mean_w(k);
  const double ew2 = state.second_moment_w(k);
  Eigen::VectorXd rest = es.f_mean - ew * state.phi_mean[k];
  const Eigen::VectorXd h = (es.c * ew) * (m.beta_mean[g].col(j) - rest);
  const double shift = es.c * ew2;
  const GramSpectrum& spec = data.spectrum(g, p);
  state.phi_shift[k] = shift;
  state.phi_mean[k] = spec.posterior_mean(shift, h);
  state.phi_var[k] = spec.posterior_variance(shift);
  es.f_mean = rest + ew * state.phi_mean[k];
}

void w_step(const PreparedData& data, VariationalState& state, const Moments& m, EdgeScratch& es, int g,
            int j, int p) {
  const ModelConfig& cfg = data.config();
  const std::size_t k = state.cov(g, j, p);
  const Eigen::VectorXd& pm = state.phi_mean[k];
  Eigen::VectorXd rest = es.f_mean - state.mean_w(k) * pm;
  const double A = es.c * (pm.squaredNorm() + state.phi_var[k].sum());
  const double B = es.c * pm.dot(m.beta_mean[g].col(j) - rest);
  const double var = 1.0 / (A + 1.0 / cfg.sigma2_w);
  const double mean = var * B;
  state.sigma_tilde[k] = var;
  state.omega[k] = mean;
  state.gamma_phi[k] = detail::sigmoid(detail::logit(cfg.pi_phi) + 0.5 * std::log(var / cfg.sigma2_w) +
                                       0.5 * mean * mean / var);
  es.f_mean = rest + state.mean_w(k) * pm;
}

void mu_step(const PreparedData& data, VariationalState& state, const Moments& m, EdgeScratch& es, int g,
             int j) {
  const ModelConfig& cfg = data.config();
  const std::size_t e = state.edge(g, j);
  const double n = data.group_size(g);
  es.f_mean.array() -= state.u_mu[e];
  const double prec = 1.0 / cfg.sigma2_mu + es.c * n;
  state.v_mu[e] = 1.0 / prec;
  state.u_mu[e] = es.c * (m.beta_mean[g].col(j) - es.f_mean).sum() / prec;
  es.f_mean.array() += state.u_mu[e];
}

void delta_step(const PreparedData& data, VariationalState& state, const Moments& m, int g, int j) {
  const ModelConfig& cfg = data.config();
  const InvGammaMoments s1 = ig_moments(state.a1[g], state.b1[g]);
  const InvGammaMoments s0 = ig_moments(state.a0[g], state.b0[g]);
  Eigen::VectorXd fm, fv;
  detail::edge_function_moments(data, state, g, j, fm, fv);
  const auto eb = m.beta_mean[g].col(j).array();
  const auto eb2 = m.beta_second[g].col(j).array();
  const double n = data.group_size(g);
  const double sq_on = (eb2 - 2.0 * eb * fm.array() + fm.array().square() + fv.array()).sum();
  const double sq_off = eb2.sum();
  const double log_odds = detail::logit(cfg.pi_delta) - 0.5 * n * (s1.mean_log - s0.mean_log) -
                          0.5 * s1.mean_inv * sq_on + 0.5 * s0.mean_inv * sq_off;
  state.gamma_delta[state.edge(g, j)] = detail::sigmoid(log_odds);
}

}  // namespace

void update_phi(const PreparedData& data, VariationalState& state, const Moments& m, int g, int j, int p) {
  EdgeScratch es = edge_scratch(data, state, g, j);
  phi_step(data, state, m, es, g, j, p);
}

void update_w(const PreparedData& data, VariationalState& state, const Moments& m, int g, int j, int p) {
  EdgeScratch es = edge_scratch(data, state, g, j);
  w_step(data, state, m, es, g, j, p);
}

void update_mu(const PreparedData& data, VariationalState& state, const Moments& m, int g, int j) {
  EdgeScratch es = edge_scratch(data, state, g, j);
  mu_step(data, state, m, es, g, j);
}

void update_delta(const PreparedData& data, VariationalState& state, const Moments& m, int g, int j) {
  delta_step(data, state, m, g, j);
}

void update_edge(const PreparedData& data, VariationalState& state, const Moments& m,
                 const std::vector<int>& order, int g, int j) {
  EdgeScratch es = edge_scratch(data, state, g, j);
  if (!data.config().intercept_only) {
    for (int p : order) {
      phi_step(data, state, m, es, g, j, p);
      w_step(data, state, m, es, g, j, p);
    }
  }
  mu_step(data, state, m, es, g, j);
  delta_step(data, state, m, g, j);
}

void update_sigma(const PreparedData& data, VariationalState& state, const Moments& m, int g) {
  const ModelConfig& cfg = data.config();
  const int J = data.J();
  const double n = data.group_size(g);
  double on_weight = 0.0, off_weight = 0.0, on_sq = 0.0, off_sq = 0.0;
  for (int j = 0; j < J; ++j) {
    const double gd = state.gamma_delta[state.edge(g, j)];
    const auto eb = m.beta_mean[g].col(j).array();
    const auto eb2 = m.beta_second[g].col(j).array();
    const auto ef = m.f_mean[g].col(j).array();
    const auto vf = m.f_var[g].col(j).array();
    on_weight += gd;
    off_weight += 1.0 - gd;
    on_sq += gd * (eb2 - 2.0 * eb * ef + ef.square() + vf).sum();
    off_sq += (1.0 - gd) * eb2.sum();
  }
  state.a1[g] = cfg.a1 + 0.5 * n * on_weight;
  state.b1[g] = cfg.b1 + 0.5 * on_sq;
  state.a0[g] = cfg.a0 + 0.5 * n * off_weight;
  state.b0[g] = cfg.b0 + 0.5 * off_sq;
}

void update_xi(const PreparedData& data, VariationalState& state, int g) {
  const ModelConfig& cfg = data.config();
  const int RL = data.RL();
  for (int r = 0; r < data.R(); ++r) {
    double n_obs = 0.0, rss = 0.0;
    for (int s : data.members(g)) {
      const SubjectStats& st = data.subject(s);
      const auto b = state.beta_mean[s].segment(r * RL, RL);
      n_obs += st.n_obs;
      rss += st.XtX(r) - 2.0 * b.dot(st.UtX.col(r)) + b.dot(st.UtU * b) +
             st.UtU.cwiseProduct(state.beta_cov[s][r]).sum();
    }
    state.z1[state.noise(g, r)] = cfg.a_xi + 0.5 * n_obs;
    state.z2[state.noise(g, r)] = cfg.b_xi + 0.5 * rss;
  }
}

}  // namespace blocks

// ---------------------------------------------------------------------------
// Sweeps and fitting

namespace {

void check_block(const PreparedData& data, const VariationalState& state, double& last, const char* block,
                 const SweepOptions& options) {
  const double now = compute_elbo(data, state, options.parallel);
  if (now < last - options.monotone_tol * std::abs(last)) {
    throw NumericalError(std::string("ELBO decreased after block ") + block + ": " + std::to_string(last) +
                         " -> " + std::to_string(now));
  }
  last = now;
}

}  // namespace

void cavi_sweep(const PreparedData& data, VariationalState& state, const UpdateSchedule& schedule,
                const SweepOptions& options) {
  const kernels::Exec exec = kernels::exec_for(options.parallel);
  double last = options.check_blocks ? compute_elbo(data, state, options.parallel) : 0.0;

  Moments m;
  kernels::gather_functions(data, state, m, exec);
  kernels::update_betas(data, state, m, exec);
  if (options.check_blocks) check_block(data, state, last, "q(beta)", options);

  m.gather_beta(data, state);
  kernels::update_edges(data, state, m, schedule, exec);
  if (options.check_blocks) check_block(data, state, last, "edge blocks (phi, w, mu, delta)", options);

  kernels::gather_functions(data, state, m, exec);
  for (int g = 0; g < data.G(); ++g) blocks::update_sigma(data, state, m, g);
  if (options.check_blocks) check_block(data, state, last, "q(sigma0), q(sigma1)", options);

  for (int g = 0; g < data.G(); ++g) blocks::update_xi(data, state, g);
  if (options.check_blocks) check_block(data, state, last, "q(xi)", options);
}

FitOutput fit(const PreparedData& data, const UpdateSchedule& schedule, const FitOptions& options,
              std::uint64_t seed) {
  schedule.validate(data.G(), data.J(), data.P());
  require(options.max_sweeps >= 1, "max_sweeps must be >= 1");
  FitOutput out{init_state(data, seed, options.init), {}, schedule};
  SweepOptions so;
  so.check_blocks = options.check_blocks;
  so.monotone_tol = options.monotone_tol;
  so.parallel = options.parallel;

  double prev = compute_elbo(data, out.state, options.parallel);
  int quiet = 0;
  for (int sweep = 0; sweep < options.max_sweeps; ++sweep) {
    cavi_sweep(data, out.state, schedule, so);
    const double now = compute_elbo(data, out.state, options.parallel);
    out.trace.values.push_back(now);
    out.trace.sweeps = sweep + 1;
    if (now < prev - options.monotone_tol * std::abs(prev)) {
      throw NumericalError("ELBO decreased at sweep " + std::to_string(sweep + 1) + ": " +
                           std::to_string(prev) + " -> " + std::to_string(now));
    }
    const double rel = std::abs(now - prev) / std::max(std::abs(prev), 1e-300);
    quiet = rel < options.rel_tol ? quiet + 1 : 0;
    prev = now;
    if (quiet >= options.patience) {
      out.trace.converged = true;
      break;
    }
  }
  return out;
}

UpdateSchedule prioritized_schedule(const PreparedData& data, const FitOptions& options, std::uint64_t seed) {
  const int G = data.G(), J = data.J(), P = data.P();
  UpdateSchedule result = UpdateSchedule::ascending(G, J, P);
  result.cold_start_sweeps = options.cold_start_sweeps;
  if (P == 0 || data.config().intercept_only) return result;

  std::vector<double> importance(static_cast<std::size_t>(G) * J * P, 0.0);
  FitOptions cold = options;
  cold.max_sweeps = options.cold_start_sweeps;
  cold.check_blocks = false;
  for (int run = 0; run < 2 * P; ++run) {
    const int p = run % P;
    std::vector<int> order;
    if (run < P) order.push_back(p);
    for (int q = 0; q < P; ++q) {
      if (q != p) order.push_back(q);
    }
    if (run >= P) order.push_back(p);
    UpdateSchedule sched;
    sched.covariate_order.assign(static_cast<std::size_t>(G) * J, order);
    const FitOutput f = fit(data, sched, cold, seed);
    for (std::size_t k = 0; k < importance.size(); ++k) importance[k] += f.state.gamma_phi[k];
  }
  result.n_cold_starts = 2 * P;
  for (int e = 0; e < G * J; ++e) {
    auto& order = result.covariate_order[e];
    const double* imp = importance.data() + static_cast<std::size_t>(e) * P;
    std::stable_sort(order.begin(), order.end(), [imp](int a, int b) { return imp[a] > imp[b]; });
  }
  return result;
}

FitOutput fit_model(const PreparedData& data, const FitOptions& options, std::uint64_t seed) {
  const UpdateSchedule schedule = options.prioritize
                                      ? prioritized_schedule(data, options, seed)
                                      : UpdateSchedule::ascending(data.G(), data.J(), data.P());
  return fit(data, schedule, options, seed);
}

}  // namespace vevar

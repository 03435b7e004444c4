#include "oracles.hpp"

#include "vevar/baselines.hpp"
#include "vevar/kernel.hpp"
#include "vevar/metrics.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

namespace oracle {

using namespace vevar;

namespace {

constexpr double kLog2Pi = 1.8378770664093453;

std::string fmt(const char* f, double a, double b = 0, double c = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

}  // namespace

double log_inv_gamma(double x, double a, double b) {
  return a * std::log(b) - std::lgamma(a) - (a + 1.0) * std::log(x) - b / x;
}

double log_normal(double x, double mean, double var) {
  const double d = x - mean;
  return -0.5 * (kLog2Pi + std::log(var)) - 0.5 * d * d / var;
}

std::vector<SubjectDataset> toy_data() {
  SubjectDataset s;
  s.subject_id = 1;
  s.series.resize(3, 1);
  s.series << 0.4, -0.2, 0.7;
  s.covariates.resize(2);
  s.covariates << 0.3, -0.5;
  s.group = 1;
  return {s};
}

VariationalState toy_state(const PreparedData& data) {
  VariationalState st = init_state(data);
  const double K = data.config().kernel_variance * (1.0 + data.config().jitter_scale);
  st.beta_mean[0](0) = 0.3;
  st.beta_cov[0][0](0, 0) = 0.05;
  st.gamma_delta[0] = 0.6;
  st.u_mu[0] = 0.2;
  st.v_mu[0] = 0.1;
  const double omega[2] = {0.5, -0.3}, gphi[2] = {0.4, 0.7}, shift[2] = {0.8, 1.7}, pm[2] = {0.25, -0.4};
  for (int p = 0; p < 2; ++p) {
    st.omega[p] = omega[p];
    st.sigma_tilde[p] = 0.2 + 0.1 * p;
    st.gamma_phi[p] = gphi[p];
    st.phi_shift[p] = shift[p];
    st.phi_mean[p](0) = pm[p];
    st.phi_var[p](0) = K / (1.0 + shift[p] * K);
  }
  st.a0[0] = 3.0;
  st.b0[0] = 0.5;
  st.a1[0] = 4.0;
  st.b1[0] = 2.0;
  st.z1[0] = 3.0;
  st.z2[0] = 1.5;
  return st;
}

std::vector<bool> bh_reference(std::span<const double> p, double q) {
  const std::size_t m = p.size();
  std::vector<double> sorted(p.begin(), p.end());
  std::sort(sorted.begin(), sorted.end());
  double cutoff = -1.0;
  for (std::size_t k = m; k >= 1; --k) {
    if (sorted[k - 1] <= q * static_cast<double>(k) / static_cast<double>(m)) {
      cutoff = sorted[k - 1];
      break;
    }
  }
  std::vector<bool> out(m);
  for (std::size_t i = 0; i < m; ++i) out[i] = p[i] <= cutoff;
  return out;
}

double ks_pvalue(std::vector<double> x) {
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    d = std::max({d, (i + 1) / n - x[i], x[i] - i / n});
  }
  const double lambda = (std::sqrt(n) + 0.12 + 0.11 / std::sqrt(n)) * d;
  double p = 0.0;
  for (int k = 1; k <= 100; ++k) {
    p += 2.0 * ((k % 2) ? 1.0 : -1.0) * std::exp(-2.0 * k * k * lambda * lambda);
  }
  return std::clamp(p, 0.0, 1.0);
}

double spectral_radius(const Eigen::MatrixXd& B, int L) {
  const Eigen::Index R = B.cols();
  const Eigen::Index RL = R * L;
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(RL, RL);
  C.leftCols(R) = B;
  if (L > 1) C.block(0, R, R * (L - 1), R * (L - 1)).setIdentity();
  return Eigen::EigenSolver<Eigen::MatrixXd>(C, false).eigenvalues().cwiseAbs().maxCoeff();
}

double golden_max(const std::function<double(double)>& f, double lo, double hi, double tol) {
  const double r = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - r * (b - a), d = a + r * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > tol) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - r * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + r * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

// ---------------------------------------------------------------------------

Report metric_formulas(int cases, std::uint64_t seed) {
  Report rep{"metric formulas vs brute-force counting", true, ""};
  std::mt19937_64 rng(seed);
  int bad = 0;
  for (int c = 0; c < cases; ++c) {
    const int n = std::uniform_int_distribution<int>(1, 200)(rng);
    const double ps = std::uniform_real_distribution<double>(0, 1)(rng);
    const double pt = std::uniform_real_distribution<double>(0, 1)(rng);
    std::vector<bool> sel(n), tru(n);
    long tp = 0, fp = 0, fn = 0, tn = 0;
    for (int i = 0; i < n; ++i) {
      sel[i] = std::bernoulli_distribution(ps)(rng);
      tru[i] = std::bernoulli_distribution(pt)(rng);
      if (sel[i] && tru[i]) ++tp;
      if (sel[i] && !tru[i]) ++fp;
      if (!sel[i] && tru[i]) ++fn;
      if (!sel[i] && !tru[i]) ++tn;
    }
    const ConfusionCounts cc = score(sel, tru);
    if (cc.tp != tp || cc.fp != fp || cc.fn != fn || cc.tn != tn) {
      ++bad;
      continue;
    }
    const SelectionScores s = compute_scores(cc);
    const double dtp = tp, dfp = fp, dfn = fn, dtn = tn;
    const double mcc_den = (dtp + dfp) * (dtp + dfn) * (dtn + dfp) * (dtn + dfn);
    const std::pair<double, double> expect[kMetricCount] = {
        {dtp, dtp + dfn},
        {dfp, dfp + dtn},
        {dtp * dtn - dfp * dfn, std::sqrt(mcc_den)},
        {2 * dtp, 2 * dtp + dfp + dfn},
        {dtp + dtn, static_cast<double>(n)},
    };
    for (int m = 0; m < kMetricCount; ++m) {
      const auto [num, den] = expect[m];
      if (den == 0.0) {
        bad += !s.undefined[m];
      } else {
        bad += s.undefined[m] || s.value[m] != num / den;
      }
    }
  }
  rep.pass = bad == 0;
  rep.detail = std::to_string(cases) + " cases, " + std::to_string(bad) + " mismatches";
  return rep;
}

Report elbo_monte_carlo(long draws, std::uint64_t seed) {
  Report rep{"ELBO vs Monte Carlo on the toy instance", false, ""};
  const auto subjects = toy_data();
  const PreparedData data(subjects, ModelConfig{});
  const ModelConfig& cfg = data.config();
  const VariationalState st = toy_state(data);
  const double elbo = compute_elbo(data, st, false);

  const Eigen::MatrixXd& x = subjects[0].series;
  const double K = cfg.kernel_variance * (1.0 + cfg.jitter_scale);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z;
  std::uniform_real_distribution<double> u(0, 1);
  auto inv_gamma = [&](double a, double b) { return 1.0 / std::gamma_distribution<double>(a, 1.0 / b)(rng); };

  double sum = 0, sum2 = 0;
  const double bvar = st.beta_cov[0][0](0, 0);
  for (long d = 0; d < draws; ++d) {
    double lp = 0, lq = 0;
    const double beta = st.beta_mean[0](0) + std::sqrt(bvar) * z(rng);
    lq += log_normal(beta, st.beta_mean[0](0), bvar);
    const double xi = inv_gamma(st.z1[0], st.z2[0]);
    lq += log_inv_gamma(xi, st.z1[0], st.z2[0]);
    lp += log_inv_gamma(xi, cfg.a_xi, cfg.b_xi);
    for (int t = 1; t < 3; ++t) lp += log_normal(x(t, 0), beta * x(t - 1, 0), xi);

    const bool delta = u(rng) < st.gamma_delta[0];
    lq += std::log(delta ? st.gamma_delta[0] : 1.0 - st.gamma_delta[0]);
    lp += std::log(delta ? cfg.pi_delta : 1.0 - cfg.pi_delta);
    const double mu = st.u_mu[0] + std::sqrt(st.v_mu[0]) * z(rng);
    lq += log_normal(mu, st.u_mu[0], st.v_mu[0]);
    lp += log_normal(mu, 0.0, cfg.sigma2_mu);

    double f = mu;
    for (int p = 0; p < 2; ++p) {
      const bool s = u(rng) < st.gamma_phi[p];
      lq += std::log(s ? st.gamma_phi[p] : 1.0 - st.gamma_phi[p]);
      lp += std::log(s ? cfg.pi_phi : 1.0 - cfg.pi_phi);
      const double wm = s ? st.omega[p] : 0.0;
      const double wv = s ? st.sigma_tilde[p] : cfg.sigma2_w;
      const double w = wm + std::sqrt(wv) * z(rng);
      lq += log_normal(w, wm, wv);
      lp += log_normal(w, 0.0, cfg.sigma2_w);
      const double phi = st.phi_mean[p](0) + std::sqrt(st.phi_var[p](0)) * z(rng);
      lq += log_normal(phi, st.phi_mean[p](0), st.phi_var[p](0));
      lp += log_normal(phi, 0.0, K);
      if (s) f += w * phi;
    }

    const double s0 = inv_gamma(st.a0[0], st.b0[0]);
    const double s1 = inv_gamma(st.a1[0], st.b1[0]);
    lq += log_inv_gamma(s0, st.a0[0], st.b0[0]) + log_inv_gamma(s1, st.a1[0], st.b1[0]);
    lp += log_inv_gamma(s0, cfg.a0, cfg.b0) + log_inv_gamma(s1, cfg.a1, cfg.b1);
    lp += delta ? log_normal(beta, f, s1) : log_normal(beta, 0.0, s0);

    const double v = lp - lq;
    sum += v;
    sum2 += v * v;
  }
  const double n = static_cast<double>(draws);
  const double mean = sum / n;
  const double se = std::sqrt((sum2 / n - mean * mean) / n);
  rep.pass = std::abs(mean - elbo) <= 3.0 * se;
  rep.detail = fmt("elbo %.6f, MC %.6f, SE %.2e", elbo, mean, se);
  return rep;
}

Report block_updates(double tol) {
  Report rep{"CAVI block updates vs 1-D numeric maximization", true, ""};
  const auto subjects = toy_data();
  const PreparedData data(subjects, ModelConfig{});
  const VariationalState base = toy_state(data);
  const double K = data.config().kernel_variance * (1.0 + data.config().jitter_scale);

  enum class Dom { Real, Positive, Prob };
  struct Coord {
    std::string name;
    Dom dom;
    std::function<double&(VariationalState&)> ref;
    std::function<void(VariationalState&)> fix = [](VariationalState&) {};
  };
  struct Block {
    std::string name;
    std::function<void(VariationalState&, const Moments&)> update;
    std::vector<Coord> coords;
  };

  std::vector<Block> list;
  list.push_back({"beta",
                  [&](VariationalState& s, const Moments& m) { blocks::update_beta(data, s, m, 0); },
                  {{"mean", Dom::Real, [](VariationalState& s) -> double& { return s.beta_mean[0](0); }},
                   {"var", Dom::Positive, [](VariationalState& s) -> double& { return s.beta_cov[0][0](0, 0); }}}});
  for (int p = 0; p < 2; ++p) {
    const std::string tag = "[" + std::to_string(p) + "]";
    list.push_back({"phi" + tag,
                    [&, p](VariationalState& s, const Moments& m) { blocks::update_phi(data, s, m, 0, 0, p); },
                    {{"mean", Dom::Real, [p](VariationalState& s) -> double& { return s.phi_mean[p](0); }},
                     {"shift", Dom::Positive, [p](VariationalState& s) -> double& { return s.phi_shift[p]; },
                      [p, K](VariationalState& s) { s.phi_var[p](0) = K / (1.0 + s.phi_shift[p] * K); }}}});
    list.push_back({"w" + tag,
                    [&, p](VariationalState& s, const Moments& m) { blocks::update_w(data, s, m, 0, 0, p); },
                    {{"omega", Dom::Real, [p](VariationalState& s) -> double& { return s.omega[p]; }},
                     {"sigma_tilde", Dom::Positive, [p](VariationalState& s) -> double& { return s.sigma_tilde[p]; }},
                     {"gamma_phi", Dom::Prob, [p](VariationalState& s) -> double& { return s.gamma_phi[p]; }}}});
  }
  list.push_back({"mu", [&](VariationalState& s, const Moments& m) { blocks::update_mu(data, s, m, 0, 0); },
                  {{"mean", Dom::Real, [](VariationalState& s) -> double& { return s.u_mu[0]; }},
                   {"var", Dom::Positive, [](VariationalState& s) -> double& { return s.v_mu[0]; }}}});
  list.push_back({"delta", [&](VariationalState& s, const Moments& m) { blocks::update_delta(data, s, m, 0, 0); },
                  {{"gamma", Dom::Prob, [](VariationalState& s) -> double& { return s.gamma_delta[0]; }}}});
  list.push_back({"sigma", [&](VariationalState& s, const Moments& m) { blocks::update_sigma(data, s, m, 0); },
                  {{"a0", Dom::Positive, [](VariationalState& s) -> double& { return s.a0[0]; }},
                   {"b0", Dom::Positive, [](VariationalState& s) -> double& { return s.b0[0]; }},
                   {"a1", Dom::Positive, [](VariationalState& s) -> double& { return s.a1[0]; }},
                   {"b1", Dom::Positive, [](VariationalState& s) -> double& { return s.b1[0]; }}}});
  list.push_back({"xi", [&](VariationalState& s, const Moments&) { blocks::update_xi(data, s, 0); },
                  {{"z1", Dom::Positive, [](VariationalState& s) -> double& { return s.z1[0]; }},
                   {"z2", Dom::Positive, [](VariationalState& s) -> double& { return s.z2[0]; }}}});

  double worst = 0.0;
  std::ostringstream fails;
  int checked = 0;
  for (const Block& b : list) {
    VariationalState st = base;
    Moments m;
    m.gather_beta(data, st);
    m.gather_functions(data, st);
    b.update(st, m);
    for (const Coord& c : b.coords) {
      const double x0 = c.ref(st);
      auto objective = [&](double v) {
        VariationalState trial = st;
        c.ref(trial) = v;
        c.fix(trial);
        return compute_elbo(data, trial, false);
      };
      double lo, hi;
      switch (c.dom) {
        case Dom::Real: lo = x0 - 1.0 - std::abs(x0); hi = x0 + 1.0 + std::abs(x0); break;
        case Dom::Positive: lo = 0.25 * x0; hi = 4.0 * x0; break;
        default: lo = 1e-12; hi = 1.0 - 1e-12; break;
      }
      const double xm = golden_max(objective, lo, hi);
      const double err = std::abs(xm - x0);
      worst = std::max(worst, err);
      ++checked;
      if (err > tol) {
        rep.pass = false;
        fails << ' ' << b.name << '.' << c.name << "(" << x0 << " vs " << xm << ")";
      }
    }
  }
  rep.detail = std::to_string(checked) + " coordinates, max |argmax - update| " + fmt("%.2e", worst) + fails.str();
  return rep;
}

Report gram_psd(int grids, std::uint64_t seed) {
  Report rep{"kernel Gram PSD on random grids", true, ""};
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1, 1);
  double worst_min = 1e300;
  int bad = 0;
  for (int i = 0; i < grids; ++i) {
    const int n = std::uniform_int_distribution<int>(1, 80)(rng);
    KernelParams kp;
    kp.lengthscale = std::exp(std::uniform_real_distribution<double>(std::log(0.05), std::log(2.0))(rng));
    kp.variance = std::exp(std::uniform_real_distribution<double>(std::log(0.1), std::log(5.0))(rng));
    kp.jitter = 1e-6 * kp.variance;
    Eigen::VectorXd grid(n);
    for (int k = 0; k < n; ++k) grid(k) = (k % 3 == 2) ? grid(k - 1) : u(rng);  // include ties
    const GramMatrix g = gram(grid, kp);
    double entry_err = 0.0;
    for (int a = 0; a < n; ++a) {
      for (int b = 0; b < n; ++b) {
        const double d = grid(a) - grid(b);
        const double want = kp.variance * std::exp(-d * d / (2 * kp.lengthscale * kp.lengthscale)) + (a == b ? kp.jitter : 0);
        entry_err = std::max(entry_err, std::abs(g.K(a, b) - want));
      }
    }
    const double min_eig = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(g.K, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
    worst_min = std::min(worst_min, min_eig / kp.variance);
    if (min_eig < 0 || entry_err > 1e-14 || !g.K.isApprox(g.K.transpose(), 0)) ++bad;
  }
  rep.pass = bad == 0;
  rep.detail = std::to_string(grids) + " grids, min eigenvalue / variance " + fmt("%.2e", worst_min) + ", " +
               std::to_string(bad) + " failures";
  return rep;
}

Report simulator_stationarity(const Study& study) {
  Report rep{"simulator stationarity on every subject", true, ""};
  const int R = study.truth.R, L = study.truth.L;
  double worst = 0.0;
  for (Eigen::Index s = 0; s < study.truth.subject_coefs.rows(); ++s) {
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(R * L, R);
    for (int target = 0; target < R; ++target) {
      for (int lag = 0; lag < L; ++lag) {
        for (int source = 0; source < R; ++source) {
          B(lag * R + source, target) = study.truth.subject_coefs(s, target * R * L + lag * R + source);
        }
      }
    }
    worst = std::max(worst, spectral_radius(B, L));
  }
  rep.pass = worst < 1.0;
  rep.detail = std::to_string(study.truth.subject_coefs.rows()) + " subjects, max spectral radius " + fmt("%.4f", worst);
  return rep;
}

Report bh_step_up(int vectors, std::uint64_t seed) {
  Report rep{"BH step-up vs hand computation", true, ""};
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0, 1);
  const double levels[] = {0.01, 0.05, 0.1, 0.2};
  int bad = 0, rejections = 0;
  for (int v = 0; v < vectors; ++v) {
    const int m = std::uniform_int_distribution<int>(1, 60)(rng);
    const double signal = u(rng);
    std::vector<double> p(m);
    for (double& x : p) x = u(rng) < signal ? std::pow(u(rng), 6.0) : u(rng);
    if (m > 3) p[1] = p[0];  // ties
    const double q = levels[v % 4];
    const std::vector<bool> want = bh_reference(p, q);
    rejections += static_cast<int>(std::count(want.begin(), want.end(), true));
    bad += fdr_select(p, q) != want;
  }
  rep.pass = bad == 0;
  rep.detail = std::to_string(vectors) + " vectors, " + std::to_string(rejections) + " rejections, " +
               std::to_string(bad) + " mismatches";
  return rep;
}

}  // namespace oracle

#pragma once

#include "vevar/kernel.hpp"
#include "vevar/model.hpp"
#include "vevar/state.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace vevar {

/// Sufficient statistics of one subject's lagged regression.
struct SubjectStats {
  int subject_id = 0;
  int group = 0;  // 0-based
  int pos = 0;    // position within its group
  int n_obs = 0;  // T - L
  Eigen::MatrixXd UtU;  // RL x RL
  Eigen::MatrixXd UtX;  // RL x R
  Eigen::VectorXd XtX;  // diagonal of X^T X, length R
  Eigen::VectorXd covariates;
};

/// Data and fixed quantities shared by every CAVI sweep: per-subject
/// sufficient statistics, group membership and the Gram spectrum of each
/// (group, covariate) grid. Immutable after construction.
class PreparedData {
 public:
  /// Fills R, G and P of the config from the data when they are zero;
  /// otherwise checks them against it.
  PreparedData(std::span<const SubjectDataset> data, ModelConfig config);

  const ModelConfig& config() const { return config_; }
  int n_subjects() const { return static_cast<int>(subjects_.size()); }
  int R() const { return config_.R; }
  int L() const { return config_.L; }
  int G() const { return config_.G; }
  int P() const { return config_.P; }
  int RL() const { return config_.R * config_.L; }
  int J() const { return n_coefficients(config_.R, config_.L); }

  const SubjectStats& subject(int s) const { return subjects_[s]; }
  const std::vector<int>& members(int g) const { return members_[g]; }
  int group_size(int g) const { return static_cast<int>(members_[g].size()); }
  const Eigen::VectorXd& grid(int g, int p) const { return grids_[g * config_.P + p]; }
  const GramSpectrum& spectrum(int g, int p) const { return spectra_[g * config_.P + p]; }
  KernelParams kernel_params() const;

  Eigen::MatrixXd phi_covariance(const VariationalState& state, int g, int j, int p) const;

 private:
  ModelConfig config_;
  std::vector<SubjectStats> subjects_;
  std::vector<std::vector<int>> members_;
  std::vector<Eigen::VectorXd> grids_;
  std::vector<GramSpectrum> spectra_;
};

/// Per-sweep moments gathered from the state. For each group g, matrices are
/// n_g x J with rows in group order.
struct Moments {
  std::vector<Eigen::MatrixXd> beta_mean;    // E[beta]
  std::vector<Eigen::MatrixXd> beta_second;  // E[beta^2]
  std::vector<Eigen::MatrixXd> f_mean;       // E[f(m_s)]
  std::vector<Eigen::MatrixXd> f_var;        // Var[f(m_s)]

  void gather_beta(const PreparedData& data, const VariationalState& state);
  void gather_functions(const PreparedData& data, const VariationalState& state);
};

/// Expectations under IG(shape, rate).
struct InvGammaMoments {
  double mean_inv;  // E[1/x]
  double mean_log;  // E[log x]
};
InvGammaMoments ig_moments(double shape, double rate);

/// ELBO broken into its additive pieces.
struct ElboTerms {
  double likelihood = 0;     // E log p(X | beta, xi)
  double subject_prior = 0;  // E log p(beta | f, delta, sigma)
  double beta_entropy = 0;
  double mu = 0;             // E log p(mu) + H[q(mu)]
  double delta = 0;
  double w = 0;              // (w~, s) pair
  double phi = 0;
  double sigma = 0;
  double xi = 0;

  double total() const {
    return likelihood + subject_prior + beta_entropy + mu + delta + w + phi + sigma + xi;
  }
};

struct SweepOptions {
  /// Evaluate the ELBO after each block family and throw NumericalError naming
  /// the block when it drops by more than `monotone_tol` relative.
  bool check_blocks = false;
  double monotone_tol = 1e-6;
  bool parallel = true;
};

/// Starting inclusion probabilities. `Slab` starts every edge and covariate
/// effect switched on and lets the sweeps prune; `Prior` starts at pi_delta and
/// pi_phi.
enum class InitMode { Slab, Prior };

struct FitOptions {
  int max_sweeps = 5000;
  double rel_tol = 1e-8;
  int patience = 3;
  double monotone_tol = 1e-6;
  int cold_start_sweeps = 25;
  bool prioritize = true;
  bool check_blocks = false;
  bool parallel = true;
  InitMode init = InitMode::Slab;
};

struct FitOutput {
  VariationalState state;
  ElboTrace trace;
  UpdateSchedule schedule;
};

/// Deterministic starting point: inclusion probabilities per `mode`, ridge
/// subject estimates, group-average intercepts. In Slab mode q(sigma0) and
/// q(sigma1) start at the spread of the ridge estimates; in Prior mode at the
/// prior. `seed` is accepted for interface stability; nothing is drawn.
VariationalState init_state(const PreparedData& data, std::uint64_t seed = 0, InitMode mode = InitMode::Slab);

ElboTerms compute_elbo_terms(const PreparedData& data, const VariationalState& state,
                             bool parallel = true);
double compute_elbo(const PreparedData& data, const VariationalState& state, bool parallel = true);

/// One pass of coordinate ascent: subject coefficients, then per-edge blocks
/// (phi and (w~, s) for each covariate in schedule order, then mu, then delta),
/// then sigma0, sigma1 and xi per group.
void cavi_sweep(const PreparedData& data, VariationalState& state, const UpdateSchedule& schedule,
                const SweepOptions& options = {});

/// Runs sweeps until the relative ELBO change stays below rel_tol for
/// `patience` consecutive sweeps or max_sweeps is reached.
FitOutput fit(const PreparedData& data, const UpdateSchedule& schedule, const FitOptions& options,
              std::uint64_t seed = 0);

/// Covariate priority from 2P short cold starts: run p puts covariate p first,
/// run P+p puts it last. Importance is the mean gamma_phi across runs.
UpdateSchedule prioritized_schedule(const PreparedData& data, const FitOptions& options,
                                    std::uint64_t seed = 0);

/// Schedule (prioritized when requested and P > 0) followed by the main fit.
FitOutput fit_model(const PreparedData& data, const FitOptions& options, std::uint64_t seed = 0);

/// Single-block CAVI updates, exposed for coordinate-optimality checks.
namespace blocks {
void update_beta(const PreparedData& data, VariationalState& state, const Moments& m, int s);
void update_phi(const PreparedData& data, VariationalState& state, const Moments& m, int g, int j, int p);
void update_w(const PreparedData& data, VariationalState& state, const Moments& m, int g, int j, int p);
void update_mu(const PreparedData& data, VariationalState& state, const Moments& m, int g, int j);
void update_delta(const PreparedData& data, VariationalState& state, const Moments& m, int g, int j);
/// All blocks of one edge in schedule order.
void update_edge(const PreparedData& data, VariationalState& state, const Moments& m,
                 const std::vector<int>& order, int g, int j);
void update_sigma(const PreparedData& data, VariationalState& state, const Moments& m, int g);
void update_xi(const PreparedData& data, VariationalState& state, int g);
}  // namespace blocks

}  // namespace vevar

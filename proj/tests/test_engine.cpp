#include "oracles.hpp"
#include "vevar/error.hpp"
#include "vevar/kernels.hpp"
#include "vevar/selector.hpp"

#include <doctest.h>

using namespace vevar;

namespace {

Study small_study(std::uint64_t seed) {
  SimConfig sim;
  sim.R = 4;
  sim.T = 80;
  sim.group_sizes = {8, 12};
  sim.seed = seed;
  return simulate_study(sim);
}

}  // namespace

TEST_SUITE("engine") {

TEST_CASE("ELBO equals a Monte Carlo estimate on the toy instance") {
  const auto r = oracle::elbo_monte_carlo(1'000'000, 17);
  INFO(r.detail);
  CHECK(r.pass);
}

TEST_CASE("every block update is a coordinate-wise maximizer") {
  const auto r = oracle::block_updates(1e-4);
  INFO(r.detail);
  CHECK(r.pass);
}

TEST_CASE("initial state") {
  const Study st = small_study(2);
  const PreparedData data(st.subjects, ModelConfig{});
  const VariationalState slab = init_state(data);
  CHECK_NOTHROW(slab.check_valid());
  for (double g : slab.gamma_delta) CHECK(g == 1.0);
  const VariationalState prior = init_state(data, 0, InitMode::Prior);
  for (double g : prior.gamma_phi) CHECK(g == doctest::Approx(0.1));
  CHECK(std::isfinite(compute_elbo(data, slab)));
}

TEST_CASE("ELBO never decreases, block by block") {
  const Study st = small_study(4);
  const PreparedData data(st.subjects, ModelConfig{});
  FitOptions fo;
  fo.check_blocks = true;
  fo.max_sweeps = 60;
  fo.prioritize = false;
  FitOutput out;
  REQUIRE_NOTHROW(out = fit_model(data, fo, 4));
  for (std::size_t i = 1; i < out.trace.values.size(); ++i) {
    const double prev = out.trace.values[i - 1];
    CHECK(out.trace.values[i] >= prev - 1e-6 * std::abs(prev));
  }
  CHECK_NOTHROW(out.state.check_valid());
}

TEST_CASE("serial and parallel sweeps are bitwise identical") {
  const Study st = small_study(6);
  const PreparedData data(st.subjects, ModelConfig{});
  kernels::set_threads(4);
  FitOptions fo;
  fo.max_sweeps = 15;
  fo.cold_start_sweeps = 3;
  fo.parallel = false;
  const FitOutput a = fit_model(data, fo, 1);
  fo.parallel = true;
  const FitOutput b = fit_model(data, fo, 1);
  CHECK(a.trace.values == b.trace.values);
  CHECK(a.state.gamma_delta == b.state.gamma_delta);
  CHECK(a.state.gamma_phi == b.state.gamma_phi);
  CHECK(a.state.beta_mean == b.state.beta_mean);
  CHECK(a.schedule.covariate_order == b.schedule.covariate_order);
}

TEST_CASE("prioritized schedule is a permutation per edge") {
  const Study st = small_study(8);
  const PreparedData data(st.subjects, ModelConfig{});
  FitOptions fo;
  fo.cold_start_sweeps = 3;
  const UpdateSchedule s = prioritized_schedule(data, fo, 0);
  CHECK(s.n_cold_starts == 2 * data.P());
  CHECK_NOTHROW(s.validate(data.G(), data.J(), data.P()));
}

TEST_CASE("intercept-only mode ignores covariates") {
  const Study st = small_study(9);
  ModelConfig cfg;
  cfg.intercept_only = true;
  const PreparedData data(st.subjects, cfg);
  FitOptions fo;
  fo.max_sweeps = 30;
  const FitOutput out = fit_model(data, fo);
  for (double g : out.state.gamma_phi) CHECK(g == 0.0);
  const FitResult r = summarize_fit(data, out);
  for (bool b : r.covariate_effects) CHECK_FALSE(b);
}

TEST_CASE("invalid options") {
  const Study st = small_study(10);
  const PreparedData data(st.subjects, ModelConfig{});
  FitOptions fo;
  fo.max_sweeps = 0;
  CHECK_THROWS_AS(fit(data, UpdateSchedule::ascending(data.G(), data.J(), data.P()), fo), ValidationError);
  UpdateSchedule bad = UpdateSchedule::ascending(data.G(), data.J(), data.P());
  bad.covariate_order[0][0] = bad.covariate_order[0][1];
  fo.max_sweeps = 2;
  CHECK_THROWS_AS(fit(data, bad, fo), ValidationError);
  ModelConfig wrong;
  wrong.R = 3;
  CHECK_THROWS_AS(PreparedData(st.subjects, wrong), ValidationError);
}

}

TEST_SUITE("selector") {

TEST_CASE("thresholds are strict and covariates are gated by edges") {
  const Study st = small_study(12);
  const PreparedData data(st.subjects, ModelConfig{});
  FitOutput out;
  out.state = init_state(data);
  out.state.gamma_delta.assign(out.state.gamma_delta.size(), 0.5);
  out.state.gamma_delta[1] = 0.9;
  out.state.gamma_phi.assign(out.state.gamma_phi.size(), 0.9);
  const auto edges = select_edges(out.state, 0.5);
  CHECK_FALSE(edges[0]);
  CHECK(edges[1]);
  const FitResult r = summarize_fit(data, out);
  for (std::size_t k = 0; k < r.covariate_effects.size(); ++k) {
    CHECK(r.covariate_effects[k] == (k / data.P() == 1));
  }
  CHECK(r.group_functions[0].isZero());
  CHECK(r.subject_strengths.rows() == data.n_subjects());
}

TEST_CASE("function curve interpolates the grid") {
  const Study st = small_study(13);
  const PreparedData data(st.subjects, ModelConfig{});
  FitOptions fo;
  fo.max_sweeps = 20;
  fo.prioritize = false;
  const FitOutput out = fit_model(data, fo);
  const auto& grid = data.grid(1, 0);
  const Eigen::VectorXd curve = group_function_curve(data, out.state, 1, 0, 0, grid);
  const std::size_t k = out.state.cov(1, 0, 0);
  const Eigen::VectorXd want =
      out.state.u_mu[out.state.edge(1, 0)] + out.state.gamma_phi[k] * out.state.omega[k] * out.state.phi_mean[k].array();
  CHECK((curve - want).cwiseAbs().maxCoeff() < 1e-4);
}

}

#include "oracles.hpp"
#include "vevar/error.hpp"
#include "vevar/simulator.hpp"

#include <doctest.h>

#include <set>

using namespace vevar;

TEST_SUITE("simulator") {

TEST_CASE("every emitted subject is stationary") {
  for (std::uint64_t seed : {1, 2, 3}) {
    SimConfig sim;
    sim.seed = seed;
    const auto r = oracle::simulator_stationarity(simulate_study(sim));
    INFO(r.detail);
    CHECK(r.pass);
  }
}

TEST_CASE("stationarity check agrees with the companion eigenvalues") {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> z;
  for (int rep = 0; rep < 200; ++rep) {
    const int R = 1 + rep % 4, L = 1 + rep % 3;
    Eigen::MatrixXd B(R * L, R);
    for (int i = 0; i < B.size(); ++i) B.data()[i] = 0.5 * z(rng);
    const double rho = oracle::spectral_radius(B, L);
    if (std::abs(rho - 1.0) < 1e-9) continue;
    CHECK(is_stationary(B, L) == (rho < 1.0));
  }
}

TEST_CASE("subject coefficient dispersion") {
  SimConfig sim;
  sim.group_sizes = {100, 100};
  const Study st = simulate_study(sim);
  const int J = st.truth.J();
  double ss = 0.0;
  long n = 0;
  for (std::size_t s = 0; s < st.subjects.size(); ++s) {
    const int g = st.subjects[s].group - 1;
    for (int j = 0; j < J; ++j) {
      if (!st.truth.bank[j].active()) {
        CHECK(st.truth.subject_coefs(s, j) == 0.0);
        continue;
      }
      const double d = st.truth.subject_coefs(s, j) - st.truth.group_function(g, j, st.subjects[s].covariates);
      ss += d * d;
      ++n;
    }
  }
  const double var = ss / n;
  INFO("sample variance " << var << " over " << n);
  CHECK(var > 0.85 * sim.subject_coef_var);
  CHECK(var < 1.15 * sim.subject_coef_var);
}

TEST_CASE("function bank layout") {
  SimConfig sim;
  const Study st = simulate_study(sim);
  const int R = sim.R;
  for (int j = 0; j < st.truth.J(); ++j) {
    const CoefficientIndex c = unflatten(j + 1, R, 1);
    const int band = std::abs(c.source - c.target);
    CHECK(st.truth.band(j) == band);
    CHECK(st.truth.bank[j].active() == (band <= 7));
  }
  // covariate effects only where the edge is on
  for (std::size_t k = 0; k < st.truth.true_covariate_effects.size(); ++k) {
    if (st.truth.true_covariate_effects[k]) CHECK(st.truth.true_edges[k / sim.P]);
  }
}

TEST_CASE("full dropout leaves no true edges") {
  SimConfig sim;
  sim.group_sizes = {4, 4};
  sim.dropout_prob = 1.0;
  const Study st = simulate_study(sim);
  for (auto e : st.truth.true_edges) CHECK(e == 0);
  for (auto e : st.truth.true_covariate_effects) CHECK(e == 0);
}

TEST_CASE("covariates") {
  const Eigen::MatrixXd m = sample_covariates(500, 9);
  REQUIRE(m.cols() == 6);
  CHECK(m.leftCols(5).maxCoeff() <= 1.0);
  CHECK(m.leftCols(5).minCoeff() >= -1.0);
  std::set<double> bin(m.col(5).data(), m.col(5).data() + 500);
  CHECK(bin == std::set<double>{0.0, 1.0});
}

TEST_CASE("same seed, same study; different seed, different study") {
  SimConfig sim;
  sim.group_sizes = {5, 5};
  const Study a = simulate_study(sim), b = simulate_study(sim);
  CHECK(a.subjects[3].series == b.subjects[3].series);
  sim.seed = 2;
  const Study c = simulate_study(sim);
  CHECK_FALSE(a.subjects[3].series == c.subjects[3].series);
  CHECK(derive_seed(1, 0) != derive_seed(1, 1));
  CHECK(derive_seed(1, 0) != derive_seed(2, 0));
}

TEST_CASE("invalid simulation config") {
  SimConfig sim;
  sim.T = 1;
  CHECK_THROWS_AS(simulate_study(sim), ValidationError);
  sim = {};
  sim.group_sizes = {};
  CHECK_THROWS_AS(simulate_study(sim), ValidationError);
}

}

#include "vevar/state.hpp"

#include "vevar/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace vevar {

namespace {

void check(bool ok, const char* what, std::size_t k) {
  if (!ok) throw NumericalError(std::string("invalid variational state: ") + what + " at " + std::to_string(k));
}

}  // namespace

void VariationalState::check_valid() const {
  for (std::size_t k = 0; k < gamma_delta.size(); ++k) {
    check(v_mu[k] > 0 && std::isfinite(u_mu[k]), "q(mu)", k);
    check(gamma_delta[k] >= 0 && gamma_delta[k] <= 1, "q(delta)", k);
  }
  for (std::size_t k = 0; k < gamma_phi.size(); ++k) {
    check(gamma_phi[k] >= 0 && gamma_phi[k] <= 1, "q(s)", k);
    check(sigma_tilde[k] > 0 && std::isfinite(omega[k]), "q(w)", k);
    check(phi_shift[k] >= 0 && phi_mean[k].allFinite(), "q(phi)", k);
    check((phi_var[k].array() > 0).all(), "q(phi) variance", k);
  }
  for (std::size_t s = 0; s < beta_mean.size(); ++s) {
    check(beta_mean[s].allFinite(), "q(beta) mean", s);
    for (const auto& S : beta_cov[s]) check((S.diagonal().array() > 0).all(), "q(beta) covariance", s);
  }
  for (std::size_t g = 0; g < a0.size(); ++g) {
    check(a0[g] > 0 && b0[g] > 0 && a1[g] > 0 && b1[g] > 0, "q(sigma)", g);
  }
  for (std::size_t k = 0; k < z1.size(); ++k) check(z1[k] > 0 && z2[k] > 0, "q(xi)", k);
}

UpdateSchedule UpdateSchedule::ascending(int G, int J, int P) {
  UpdateSchedule s;
  std::vector<int> order(static_cast<std::size_t>(P));
  std::iota(order.begin(), order.end(), 0);
  s.covariate_order.assign(static_cast<std::size_t>(G) * J, order);
  return s;
}

void UpdateSchedule::validate(int G, int J, int P) const {
  require(covariate_order.size() == static_cast<std::size_t>(G) * J,
          "schedule: wrong number of edge orders");
  for (const auto& order : covariate_order) {
    require(order.size() == static_cast<std::size_t>(P), "schedule: order has wrong length");
    std::vector<int> sorted = order;
    std::sort(sorted.begin(), sorted.end());
    for (int p = 0; p < P; ++p) require(sorted[p] == p, "schedule: order is not a permutation");
  }
}

}  // namespace vevar

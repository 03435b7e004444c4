#include "vevar/kernels.hpp"

#include "engine_detail.hpp"

#include <omp.h>

#include <vector>

namespace vevar::kernels {

int max_threads() { return omp_get_max_threads(); }

void set_threads(int n) {
  if (n > 0) omp_set_num_threads(n);
}

void update_betas(const PreparedData& data, VariationalState& state, const Moments& m, Exec exec) {
  const int n = data.n_subjects();
  if (exec == Exec::Serial) {
    for (int s = 0; s < n; ++s) blocks::update_beta(data, state, m, s);
    return;
  }
#pragma omp parallel for schedule(static)
  for (int s = 0; s < n; ++s) blocks::update_beta(data, state, m, s);
}

void update_edges(const PreparedData& data, VariationalState& state, const Moments& m,
                  const UpdateSchedule& schedule, Exec exec) {
  const int J = data.J();
  const int total = data.G() * J;
  if (exec == Exec::Serial) {
    for (int k = 0; k < total; ++k) {
      blocks::update_edge(data, state, m, schedule.covariate_order[k], k / J, k % J);
    }
    return;
  }
#pragma omp parallel for schedule(dynamic, 4)
  for (int k = 0; k < total; ++k) {
    blocks::update_edge(data, state, m, schedule.covariate_order[k], k / J, k % J);
  }
}

void gather_functions(const PreparedData& data, const VariationalState& state, Moments& m, Exec exec) {
  const int G = data.G();
  const int J = data.J();
  m.f_mean.resize(G);
  m.f_var.resize(G);
  for (int g = 0; g < G; ++g) {
    m.f_mean[g].resize(data.group_size(g), J);
    m.f_var[g].resize(data.group_size(g), J);
  }
  auto one = [&](int k) {
    const int g = k / J;
    const int j = k % J;
    Eigen::VectorXd fm, fv;
    detail::edge_function_moments(data, state, g, j, fm, fv);
    m.f_mean[g].col(j) = fm;
    m.f_var[g].col(j) = fv;
  };
  const int total = G * J;
  if (exec == Exec::Serial) {
    for (int k = 0; k < total; ++k) one(k);
    return;
  }
#pragma omp parallel for schedule(static)
  for (int k = 0; k < total; ++k) one(k);
}

void subject_elbo(const PreparedData& data, const VariationalState& state, ElboTerms& out, Exec exec) {
  const int n = data.n_subjects();
  std::vector<detail::SubjectTerms> terms(static_cast<std::size_t>(n));
  if (exec == Exec::Serial) {
    for (int s = 0; s < n; ++s) terms[s] = detail::subject_terms(data, state, s);
  } else {
#pragma omp parallel for schedule(static)
    for (int s = 0; s < n; ++s) terms[s] = detail::subject_terms(data, state, s);
  }
  for (const auto& t : terms) {
    out.likelihood += t.likelihood;
    out.beta_entropy += t.entropy;
  }
}

void edge_elbo(const PreparedData& data, const VariationalState& state, const Moments& m,
               ElboTerms& out, Exec exec) {
  const int J = data.J();
  const int total = data.G() * J;
  std::vector<detail::EdgeTerms> terms(static_cast<std::size_t>(total));
  if (exec == Exec::Serial) {
    for (int k = 0; k < total; ++k) terms[k] = detail::edge_terms(data, state, m, k / J, k % J);
  } else {
#pragma omp parallel for schedule(static)
    for (int k = 0; k < total; ++k) terms[k] = detail::edge_terms(data, state, m, k / J, k % J);
  }
  for (const auto& t : terms) {
    out.subject_prior += t.subject_prior;
    out.mu += t.mu;
    out.delta += t.delta;
    out.w += t.w;
    out.phi += t.phi;
  }
}

}  // namespace vevar::kernels

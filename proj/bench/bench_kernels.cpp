// Serial reference vs OpenMP kernels on a simulated study.
//   vevar_bench [--R 10] [--T 200] [--reps 20] [--threads 0]

#include "vevar/engine.hpp"
#include "vevar/kernels.hpp"
#include "vevar/simulator.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <functional>

using namespace vevar;
using kernels::Exec;

namespace {

double time_ms(int reps, const std::function<void()>& body) {
  body();  // warm-up
  const auto t0 = std::chrono::steady_clock::now();
  for (int i = 0; i < reps; ++i) body();
  const auto t1 = std::chrono::steady_clock::now();
  return std::chrono::duration<double, std::milli>(t1 - t0).count() / reps;
}

bool same(const VariationalState& a, const VariationalState& b) {
  return a.beta_mean == b.beta_mean && a.gamma_delta == b.gamma_delta && a.omega == b.omega &&
         a.gamma_phi == b.gamma_phi && a.u_mu == b.u_mu && a.phi_mean == b.phi_mean;
}

}  // namespace

int main(int argc, char** argv) {
  SimConfig sim;
  int reps = 20;
  int threads = 0;
  CLI::App app{"kernel benchmark"};
  app.add_option("--R", sim.R, "nodes");
  app.add_option("--T", sim.T, "time points");
  app.add_option("--reps", reps, "timed repetitions");
  app.add_option("--threads", threads, "OpenMP threads (0 = default)");
  CLI11_PARSE(app, argc, argv);
  if (threads > 0) kernels::set_threads(threads);

  const Study study = simulate_study(sim);
  ModelConfig cfg;
  cfg.L = sim.L;
  const PreparedData data(study.subjects, cfg);
  const VariationalState init = init_state(data);
  const auto schedule = UpdateSchedule::ascending(data.G(), data.J(), data.P());
  Moments m;
  m.gather_beta(data, init);
  m.gather_functions(data, init);

  std::printf("R=%d T=%d subjects=%d J=%d P=%d threads=%d\n", data.R(), sim.T, data.n_subjects(), data.J(),
              data.P(), kernels::max_threads());
  std::printf("%-16s %12s %12s %8s %s\n", "kernel", "serial_ms", "parallel_ms", "speedup", "identical");

  auto row = [&](const char* name, const std::function<void(Exec, VariationalState&)>& k) {
    VariationalState a = init, b = init;
    const double ts = time_ms(reps, [&] { a = init; k(Exec::Serial, a); });
    const double tp = time_ms(reps, [&] { b = init; k(Exec::Parallel, b); });
    std::printf("%-16s %12.3f %12.3f %8.2f %s\n", name, ts, tp, ts / tp, same(a, b) ? "yes" : "NO");
  };

  row("update_betas", [&](Exec e, VariationalState& s) { kernels::update_betas(data, s, m, e); });
  row("update_edges", [&](Exec e, VariationalState& s) { kernels::update_edges(data, s, m, schedule, e); });
  {
    ElboTerms ts_terms, tp_terms;
    auto elbo = [&](Exec e, ElboTerms& t) {
      t = {};
      kernels::subject_elbo(data, init, t, e);
      kernels::edge_elbo(data, init, m, t, e);
    };
    const double ts = time_ms(reps, [&] { elbo(Exec::Serial, ts_terms); });
    const double tp = time_ms(reps, [&] { elbo(Exec::Parallel, tp_terms); });
    std::printf("%-16s %12.3f %12.3f %8.2f %s\n", "elbo", ts, tp, ts / tp,
                ts_terms.total() == tp_terms.total() ? "yes" : "NO");
  }

  const double fs = time_ms(3, [&] {
    VariationalState s = init;
    cavi_sweep(data, s, schedule, {.parallel = false});
  });
  const double fp = time_ms(3, [&] {
    VariationalState s = init;
    cavi_sweep(data, s, schedule, {.parallel = true});
  });
  std::printf("%-16s %12.3f %12.3f %8.2f\n", "cavi_sweep", fs, fp, fs / fp);
  return 0;
}

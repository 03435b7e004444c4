#include "vevar/commands.hpp"
#include "vevar/error.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  using namespace vevar::cli;
  CLI::App app{"Variational spike-and-slab varying-coefficient VAR for group connectivity"};
  app.set_version_flag("--version", std::string(vevar::io::kVersion));
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* s = app.add_subcommand("simulate", "Simulate a two-group study with known truth");
  s->add_option("--config", sim.config, "JSON config")->check(CLI::ExistingFile);
  s->add_option("--out", sim.out, "Output directory")->required();
  s->add_option("--seed", sim.seed, "Overrides the config seed");

  FitArgs fit;
  auto* f = app.add_subcommand("fit", "Fit the model to a dataset");
  f->add_option("--data", fit.data, "Dataset directory")->required()->check(CLI::ExistingDirectory);
  f->add_option("--config", fit.config, "JSON config")->check(CLI::ExistingFile);
  f->add_option("--out", fit.out, "Output directory")->required();
  f->add_flag("--intercept-only", fit.intercept_only, "Drop the covariate functions");
  f->add_option("--threshold", fit.threshold, "Posterior inclusion threshold");
  f->add_option("--max-sweeps", fit.max_sweeps, "Sweep cap");
  f->add_option("--seed", fit.seed, "Seed for the cold-start order");
  f->add_option("--threads", fit.threads, "OpenMP threads (0 = default)");

  BaselineArgs base;
  auto* b = app.add_subcommand("baseline", "Granger causality with optional LASSO second stage");
  b->add_option("--data", base.data, "Dataset directory")->required()->check(CLI::ExistingDirectory);
  b->add_option("--config", base.config, "JSON config")->check(CLI::ExistingFile);
  b->add_option("--out", base.out, "Output directory")->required();
  b->add_option("--stage2", base.stage2, "lasso or none")->check(CLI::IsMember({"lasso", "none"}));
  b->add_option("--fdr-q", base.fdr_q, "BH level");
  b->add_option("--seed", base.seed, "Seed for CV folds");
  b->add_option("--threads", base.threads, "OpenMP threads (0 = default)");

  ScoreArgs score;
  auto* c = app.add_subcommand("score", "Score selections against simulation truth");
  c->add_option("--fit", score.fit, "Fit or baseline output directory")->required()->check(CLI::ExistingDirectory);
  c->add_option("--truth", score.truth, "Truth directory or truth.csv")->required()->check(CLI::ExistingPath);
  c->add_option("--out", score.out, "Output directory")->required();

  SweepArgs sweep;
  auto* w = app.add_subcommand("sweep", "Hyperparameter sensitivity over replicates");
  w->add_option("--config", sweep.config, "JSON config")->check(CLI::ExistingFile);
  w->add_option("--param", sweep.parameter, "pi_delta, pi_phi or kernel_variance")->required();
  w->add_option("--values", sweep.values, "Values to try")->required()->delimiter(',');
  w->add_option("--replicates", sweep.replicates, "Replicates per value");
  w->add_option("--out", sweep.out, "Output CSV")->required();
  w->add_option("--threads", sweep.threads, "OpenMP threads (0 = default)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*s) cmd_simulate(sim);
    else if (*f) cmd_fit(fit);
    else if (*b) cmd_baseline(base);
    else if (*c) cmd_score(score);
    else if (*w) cmd_sweep(sweep);
  } catch (const vevar::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const vevar::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

#include "vevar/commands.hpp"

#include "vevar/baselines.hpp"
#include "vevar/csv.hpp"
#include "vevar/error.hpp"
#include "vevar/kernels.hpp"

#include <cstdlib>
#include <exception>
#include <iostream>

namespace vevar::cli {

int resolve_threads(int flag) {
  if (const char* env = std::getenv("VEVAR_THREADS"); env && *env) {
    const long v = csv::parse_long(env, "VEVAR_THREADS");
    require(v >= 1, "VEVAR_THREADS must be >= 1");
    return static_cast<int>(v);
  }
  require(flag >= 0, "--threads must be >= 0");
  return flag;
}

namespace {

io::RunConfig config_or_default(const std::optional<fs::path>& path) {
  return path ? io::load_config(*path) : io::RunConfig{};
}

void apply_threads(int flag) {
  const int n = resolve_threads(flag);
  if (n > 0) kernels::set_threads(n);
}

std::vector<std::string> relative(const fs::path& base, std::initializer_list<const char*> names) {
  std::vector<std::string> out;
  for (const char* n : names) out.push_back((base / n).string());
  return out;
}

void hash_inputs(io::RunManifest& m, const std::vector<fs::path>& files) {
  for (const auto& f : files) m.inputs.emplace_back(f.string(), io::sha256_file(f));
}

struct Prepared {
  std::vector<SubjectDataset> subjects;
  io::CovariateScaling scaling;
};

Prepared load_and_scale(const fs::path& dir, const io::RunConfig& cfg) {
  Prepared p;
  p.subjects = io::read_dataset(dir);
  p.scaling = io::rescale_covariates(p.subjects, cfg.binary_covariates);
  return p;
}

nlohmann::json scaling_json(const io::CovariateScaling& s) {
  nlohmann::json cols = nlohmann::json::array();
  for (std::size_t p = 0; p < s.binary.size(); ++p) {
    cols.push_back({{"column", p + 1}, {"binary", static_cast<bool>(s.binary[p])}, {"min", s.lo[p]}, {"max", s.hi[p]}});
  }
  return cols;
}

}  // namespace

// ---------------------------------------------------------------------------

void cmd_simulate(const SimulateArgs& a) {
  io::RunManifest m;
  m.started = io::timestamp_now();
  m.command = "simulate";
  io::RunConfig cfg = config_or_default(a.config);
  if (a.seed) cfg.sim.seed = *a.seed;
  cfg.sim.L = cfg.model.L;
  const Study study = simulate_study(cfg.sim);
  io::write_dataset(a.out, study.subjects);
  io::write_truth(a.out, study.truth, study.subjects);
  if (a.config) hash_inputs(m, {*a.config});
  m.config = io::to_json(cfg);
  m.seed = cfg.sim.seed;
  m.outputs = relative(a.out, {"subjects.csv", "series", "truth.csv", "truth_functions.csv",
                               "truth_group_values.csv", "truth_subject_coefs.csv"});
  m.finished = io::timestamp_now();
  io::write_manifest(a.out, m);
}

void cmd_fit(const FitArgs& a) {
  io::RunManifest m;
  m.started = io::timestamp_now();
  m.command = "fit";
  io::RunConfig cfg = config_or_default(a.config);
  if (a.intercept_only) cfg.model.intercept_only = true;
  if (a.threshold) {
    require(*a.threshold >= 0 && *a.threshold <= 1, "--threshold must lie in [0,1]");
    cfg.edge_threshold = cfg.covariate_threshold = *a.threshold;
  }
  if (a.max_sweeps) {
    require(*a.max_sweeps >= 1, "--max-sweeps must be >= 1");
    cfg.fit.max_sweeps = *a.max_sweeps;
  }
  const std::uint64_t seed = a.seed.value_or(cfg.sim.seed);
  apply_threads(a.threads);

  Prepared p = load_and_scale(a.data, cfg);
  hash_inputs(m, io::dataset_files(a.data));
  if (a.config) hash_inputs(m, {*a.config});

  const PreparedData data(p.subjects, cfg.model);
  const FitOutput fit = fit_model(data, cfg.fit, seed);
  const FitResult result = summarize_fit(data, fit, cfg.edge_threshold, cfg.covariate_threshold);
  io::write_fit_result(a.out, result, p.subjects, data.R(), data.config().L);

  m.config = io::to_json(cfg);
  m.seed = seed;
  m.outputs = relative(a.out, {"edges.csv", "covariate_effects.csv", "group_functions.csv",
                               "subject_strengths.csv", "elbo.csv"});
  m.extra = {{"converged", fit.trace.converged},
             {"sweeps", fit.trace.sweeps},
             {"final_elbo", fit.trace.values.empty() ? 0.0 : fit.trace.values.back()},
             {"covariate_scaling", scaling_json(p.scaling)}};
  m.finished = io::timestamp_now();
  io::write_manifest(a.out, m);
  if (!fit.trace.converged) {
    std::cerr << "warning: no convergence after " << fit.trace.sweeps << " sweeps\n";
  }
}

void cmd_baseline(const BaselineArgs& a) {
  io::RunManifest m;
  m.started = io::timestamp_now();
  m.command = "baseline";
  require(a.stage2 == "lasso" || a.stage2 == "none", "--stage2 must be lasso or none");
  io::RunConfig cfg = config_or_default(a.config);
  if (a.fdr_q) cfg.fdr_q = *a.fdr_q;
  require(cfg.fdr_q > 0 && cfg.fdr_q <= 1, "--fdr-q must lie in (0,1]");
  const std::uint64_t seed = a.seed.value_or(cfg.sim.seed);
  apply_threads(a.threads);

  Prepared p = load_and_scale(a.data, cfg);
  hash_inputs(m, io::dataset_files(a.data));
  if (a.config) hash_inputs(m, {*a.config});
  const int L = cfg.model.L;
  const GcResult gc = gc_fit(p.subjects, L, cfg.fdr_q);
  const int R = p.subjects.front().R();
  const int J = gc.J;

  csv::Table edges;
  edges.header = {"group", "j", "source", "lag", "target", "pvalue", "selected"};
  for (int g = 0; g < gc.G; ++g) {
    for (int j = 0; j < J; ++j) {
      const CoefficientIndex idx = unflatten(j + 1, R, L);
      const std::size_t e = static_cast<std::size_t>(g) * J + j;
      edges.rows.push_back({csv::format(g + 1), csv::format(j + 1), csv::format(idx.source), csv::format(idx.lag),
                            csv::format(idx.target), csv::format(gc.pvalues[e]), csv::format(static_cast<bool>(gc.selected[e]))});
    }
  }
  csv::write(a.out / "edges.csv", edges);

  csv::Table ss;
  ss.header = {"subject_id", "group", "j", "source", "lag", "target", "value"};
  for (std::size_t s = 0; s < p.subjects.size(); ++s) {
    for (int j = 0; j < J; ++j) {
      const CoefficientIndex idx = unflatten(j + 1, R, L);
      ss.rows.push_back({csv::format(p.subjects[s].subject_id), csv::format(p.subjects[s].group), csv::format(j + 1),
                         csv::format(idx.source), csv::format(idx.lag), csv::format(idx.target),
                         csv::format(gc.subject_coefs(static_cast<Eigen::Index>(s), j))});
    }
  }
  csv::write(a.out / "subject_strengths.csv", ss);
  m.outputs = relative(a.out, {"edges.csv", "subject_strengths.csv"});

  if (a.stage2 == "lasso") {
    Eigen::MatrixXd cov(static_cast<Eigen::Index>(p.subjects.size()), p.subjects.front().P());
    for (std::size_t s = 0; s < p.subjects.size(); ++s) cov.row(static_cast<Eigen::Index>(s)) = p.subjects[s].covariates.transpose();
    LassoOptions lo;
    lo.seed = seed;
    const LassoResult lasso = lasso_covariates(gc.subject_coefs, cov, gc.group_of, gc.G, lo);
    for (const auto& w : lasso.warnings) std::cerr << "warning: " << w << '\n';
    csv::Table ce;
    ce.header = {"group", "j", "source", "lag", "target", "covariate", "coefficient", "lambda", "selected"};
    for (int g = 0; g < gc.G; ++g) {
      for (int j = 0; j < J; ++j) {
        const CoefficientIndex idx = unflatten(j + 1, R, L);
        const std::size_t e = static_cast<std::size_t>(g) * J + j;
        for (int q = 0; q < lasso.P; ++q) {
          ce.rows.push_back({csv::format(g + 1), csv::format(j + 1), csv::format(idx.source), csv::format(idx.lag),
                             csv::format(idx.target), csv::format(q + 1), csv::format(lasso.coefficients[e](q)),
                             csv::format(lasso.lambda[e]),
                             csv::format(gc.selected[e] && lasso.selected[e * lasso.P + q])});
        }
      }
    }
    csv::write(a.out / "covariate_effects.csv", ce);
    m.outputs.push_back((a.out / "covariate_effects.csv").string());
  }

  m.config = io::to_json(cfg);
  m.seed = seed;
  m.extra = {{"stage2", a.stage2}, {"fdr_q", cfg.fdr_q}, {"ridge_fallback_subjects", gc.ridge_subjects},
             {"covariate_scaling", scaling_json(p.scaling)}};
  m.finished = io::timestamp_now();
  io::write_manifest(a.out, m);
}

// ---------------------------------------------------------------------------

std::vector<GroupScores> score_selections(const io::SelectionTables& sel, const io::TruthTables& truth) {
  const int J = truth.J();
  require(sel.G == truth.G && sel.J == J && sel.P == truth.P, "selection and truth dimensions differ");
  std::vector<GroupScores> out;
  for (int g = 0; g < truth.G; ++g) {
    GroupScores e;
    e.group = g + 1;
    e.target = "edge";
    e.counts = score(group_slice(sel.edges, g, J), group_slice(truth.edges, g, J));
    e.scores = compute_scores(e.counts);
    e.selected = e.counts.tp + e.counts.fp;
    out.push_back(e);
    if (!sel.has_covariates) continue;
    GroupScores c;
    c.group = g + 1;
    c.target = "covariate";
    c.counts = score(group_slice(sel.covariate_effects, g, J * truth.P), group_slice(truth.covariate_effects, g, J * truth.P));
    c.scores = compute_scores(c.counts);
    c.selected = c.counts.tp + c.counts.fp;
    out.push_back(c);
  }
  return out;
}

namespace {

csv::Table metrics_table(const std::vector<GroupScores>& rows) {
  csv::Table t;
  t.header = {"group", "target", "tp", "fp", "fn", "tn", "tpr", "fpr", "mcc", "f1", "acc"};
  for (const auto& r : rows) {
    std::vector<std::string> cells{csv::format(r.group), r.target, csv::format(r.counts.tp), csv::format(r.counts.fp),
                                   csv::format(r.counts.fn), csv::format(r.counts.tn)};
    for (int k = 0; k < kMetricCount; ++k) cells.push_back(csv::format(r.scores.value[k]));
    t.rows.push_back(std::move(cells));
  }
  return t;
}

}  // namespace

void cmd_score(const ScoreArgs& a) {
  io::RunManifest m;
  m.started = io::timestamp_now();
  m.command = "score";
  const fs::path truth_dir = fs::is_directory(a.truth) ? a.truth : a.truth.parent_path();
  const io::TruthTables truth = io::read_truth(truth_dir);
  const io::SelectionTables sel = io::read_selections(a.fit, truth.G, truth.J(), truth.P);
  const int J = truth.J();

  csv::write(a.out / "metrics.csv", metrics_table(score_selections(sel, truth)));

  csv::Table bands;
  bands.header = {"group", "band", "positives", "hits", "tpr"};
  csv::Table mse;
  mse.header = {"group", "band", "edges", "mse"};
  for (int g = 0; g < truth.G; ++g) {
    for (int b = 0; b <= 7; ++b) {
      long pos = 0, hit = 0, n = 0;
      double total = 0.0;
      for (int j = 0; j < J; ++j) {
        if (truth.band[j] != b) continue;
        const std::size_t e = static_cast<std::size_t>(g) * J + j;
        if (truth.edges[e]) {
          ++pos;
          hit += sel.edges[e];
        }
        const auto te = truth.group_values.find({g, j});
        const auto se = sel.group_values.find({g, j});
        if (!sel.edges[e] || te == truth.group_values.end() || se == sel.group_values.end()) continue;
        double sq = 0.0;
        for (const auto& [id, v] : te->second) {
          const auto it = se->second.find(id);
          require(it != se->second.end(), "group function for subject " + std::to_string(id) + " missing");
          sq += (it->second - v) * (it->second - v);
        }
        total += sq / static_cast<double>(te->second.size());
        ++n;
      }
      bands.rows.push_back({csv::format(g + 1), csv::format(b), csv::format(pos), csv::format(hit),
                            pos ? csv::format(static_cast<double>(hit) / static_cast<double>(pos)) : "nan"});
      if (!sel.group_values.empty()) {
        mse.rows.push_back({csv::format(g + 1), csv::format(b), csv::format(n),
                            n ? csv::format(total / static_cast<double>(n)) : "nan"});
      }
    }
  }
  csv::write(a.out / "bands.csv", bands);
  csv::write(a.out / "mse.csv", mse);

  hash_inputs(m, {truth_dir / "truth.csv", a.fit / "edges.csv"});
  m.outputs = relative(a.out, {"metrics.csv", "bands.csv", "mse.csv"});
  m.finished = io::timestamp_now();
  io::write_manifest(a.out, m);
}

// ---------------------------------------------------------------------------

std::vector<GroupScores> run_replicate(const io::RunConfig& cfg, std::uint64_t seed, bool parallel) {
  SimConfig sim = cfg.sim;
  sim.seed = seed;
  sim.L = cfg.model.L;
  Study study = simulate_study(sim);
  io::rescale_covariates(study.subjects, cfg.binary_covariates);
  const PreparedData data(study.subjects, cfg.model);
  FitOptions fo = cfg.fit;
  fo.parallel = parallel;
  const FitOutput fit = fit_model(data, fo, seed);
  const FitResult result = summarize_fit(data, fit, cfg.edge_threshold, cfg.covariate_threshold);
  return score_selections(io::selection_tables(result, study.subjects), io::truth_tables(study.truth, study.subjects));
}

void cmd_sweep(const SweepArgs& a) {
  io::RunManifest m;
  m.started = io::timestamp_now();
  m.command = "sweep";
  require(a.parameter == "pi_delta" || a.parameter == "pi_phi" || a.parameter == "kernel_variance",
          "sweep parameter must be one of pi_delta, pi_phi, kernel_variance");
  require(!a.values.empty(), "sweep needs at least one value");
  require(a.replicates >= 1, "replicates must be >= 1");
  const io::RunConfig base = config_or_default(a.config);
  const int threads = resolve_threads(a.threads);
  if (threads > 0) kernels::set_threads(threads);

  csv::Table table;
  table.header = {"parameter", "value", "group", "target", "replicates", "selected", "tpr", "fpr", "mcc", "f1", "acc"};
  for (double v : a.values) {
    io::RunConfig cfg = base;
    if (a.parameter == "pi_delta") cfg.model.pi_delta = v;
    else if (a.parameter == "pi_phi") cfg.model.pi_phi = v;
    else cfg.model.kernel_variance = v;
    cfg.model.validate();

    // Replicates run concurrently with serial fits inside; each writes only its own slot.
    std::vector<std::vector<GroupScores>> reps(static_cast<std::size_t>(a.replicates));
    std::vector<std::exception_ptr> errors(reps.size());
#pragma omp parallel for schedule(dynamic, 1)
    for (int r = 0; r < a.replicates; ++r) {
      try {
        reps[r] = run_replicate(cfg, derive_seed(base.sim.seed, static_cast<std::uint64_t>(r)), false);
      } catch (...) {
        errors[r] = std::current_exception();
      }
    }
    for (const auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }

    for (std::size_t row = 0; row < reps.front().size(); ++row) {
      std::vector<SelectionScores> s;
      double selected = 0.0;
      for (const auto& rep : reps) {
        s.push_back(rep[row].scores);
        selected += static_cast<double>(rep[row].selected);
      }
      const SelectionScores agg = aggregate_replicates(s);
      const GroupScores& first = reps.front()[row];
      std::vector<std::string> cells{a.parameter, csv::format(v), csv::format(first.group), first.target,
                                     csv::format(a.replicates), csv::format(selected / a.replicates)};
      for (int k = 0; k < kMetricCount; ++k) cells.push_back(csv::format(agg.value[k]));
      table.rows.push_back(std::move(cells));
    }
  }
  csv::write(a.out, table);

  if (a.config) hash_inputs(m, {*a.config});
  m.config = io::to_json(base);
  m.seed = base.sim.seed;
  m.outputs = {a.out.string()};
  m.extra = {{"parameter", a.parameter}, {"values", a.values}, {"replicates", a.replicates}};
  m.finished = io::timestamp_now();
  const fs::path mdir = a.out.has_parent_path() ? a.out.parent_path() : fs::path(".");
  io::write_manifest(mdir, m);
}

}  // namespace vevar::cli

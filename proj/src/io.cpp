#include "vevar/io.hpp"

#include "vevar/csv.hpp"
#include "vevar/error.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

namespace vevar::io {

using nlohmann::json;

namespace {

std::string where(const fs::path& p, std::size_t row) { return p.string() + ":" + std::to_string(row + 2); }

fs::path series_path(const fs::path& dir, int id) {
  return dir / "series" / ("subject_" + std::to_string(id) + ".csv");
}

// group, j, source, lag, target (all 1-based)
std::vector<std::string> edge_cells(int g, int j, int R, int L) {
  const CoefficientIndex idx = unflatten(j + 1, R, L);
  return {csv::format(g + 1), csv::format(j + 1), csv::format(idx.source), csv::format(idx.lag),
          csv::format(idx.target)};
}

const std::vector<std::string> kEdgeHeader{"group", "j", "source", "lag", "target"};

std::vector<std::string> with_edge_header(std::initializer_list<std::string> more) {
  std::vector<std::string> h = kEdgeHeader;
  h.insert(h.end(), more);
  return h;
}

}  // namespace

// ---------------------------------------------------------------------------

void write_dataset(const fs::path& dir, std::span<const SubjectDataset> subjects) {
  require(!subjects.empty(), "no subjects to write");
  const int P = subjects.front().P();
  csv::Table index;
  index.header = {"subject_id", "group"};
  for (int p = 1; p <= P; ++p) index.header.push_back("m" + std::to_string(p));
  for (const auto& s : subjects) {
    require(s.P() == P, "subject " + std::to_string(s.subject_id) + ": inconsistent covariate count");
    std::vector<std::string> row{csv::format(s.subject_id), csv::format(s.group)};
    for (int p = 0; p < P; ++p) row.push_back(csv::format(s.covariates(p)));
    index.rows.push_back(std::move(row));

    csv::Table series;
    for (int r = 1; r <= s.R(); ++r) series.header.push_back("x" + std::to_string(r));
    for (int t = 0; t < s.T(); ++t) {
      std::vector<std::string> cells;
      for (int r = 0; r < s.R(); ++r) cells.push_back(csv::format(s.series(t, r)));
      series.rows.push_back(std::move(cells));
    }
    csv::write(series_path(dir, s.subject_id), series);
  }
  csv::write(dir / "subjects.csv", index);
}

std::vector<SubjectDataset> read_dataset(const fs::path& dir) {
  const fs::path index_path = dir / "subjects.csv";
  const csv::Table index = csv::read(index_path);
  require(index.header.size() >= 2 && index.header[0] == "subject_id" && index.header[1] == "group",
          index_path.string() + ": header must start with subject_id,group");
  const int P = static_cast<int>(index.header.size()) - 2;
  for (int p = 0; p < P; ++p) {
    require(index.header[2 + p] == "m" + std::to_string(p + 1),
            index_path.string() + ": covariate columns must be m1..mP");
  }
  require(!index.rows.empty(), index_path.string() + ": no subjects");

  std::vector<SubjectDataset> out;
  std::set<int> seen;
  for (std::size_t i = 0; i < index.rows.size(); ++i) {
    const auto& row = index.rows[i];
    SubjectDataset s;
    s.subject_id = static_cast<int>(csv::parse_long(row[0], where(index_path, i)));
    s.group = static_cast<int>(csv::parse_long(row[1], where(index_path, i)));
    require(s.group >= 1, where(index_path, i) + ": group must be >= 1");
    require(seen.insert(s.subject_id).second, where(index_path, i) + ": duplicate subject_id");
    s.covariates.resize(P);
    for (int p = 0; p < P; ++p) s.covariates(p) = csv::parse_double(row[2 + p], where(index_path, i));

    const fs::path sp = series_path(dir, s.subject_id);
    const csv::Table series = csv::read(sp);
    const int R = static_cast<int>(series.header.size());
    for (int r = 0; r < R; ++r) {
      require(series.header[r] == "x" + std::to_string(r + 1), sp.string() + ": columns must be x1..xR");
    }
    s.series.resize(static_cast<Eigen::Index>(series.rows.size()), R);
    for (std::size_t t = 0; t < series.rows.size(); ++t) {
      for (int r = 0; r < R; ++r) s.series(t, r) = csv::parse_double(series.rows[t][r], where(sp, t));
    }
    require(s.series.allFinite(), sp.string() + ": non-finite value");
    require(s.covariates.allFinite(), where(index_path, i) + ": non-finite covariate");
    if (!out.empty()) require(R == out.front().R(), sp.string() + ": column count differs from other subjects");
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<fs::path> dataset_files(const fs::path& dir) {
  std::vector<fs::path> files{dir / "subjects.csv"};
  const csv::Table index = csv::read(dir / "subjects.csv");
  for (std::size_t i = 0; i < index.rows.size(); ++i) {
    files.push_back(series_path(dir, static_cast<int>(csv::parse_long(index.rows[i][0], where(dir / "subjects.csv", i)))));
  }
  return files;
}

// ---------------------------------------------------------------------------

void write_truth(const fs::path& dir, const SimTruth& truth, std::span<const SubjectDataset> subjects) {
  const int J = truth.J();
  csv::Table t;
  t.header = with_edge_header({"band", "edge"});
  for (int p = 1; p <= truth.P; ++p) t.header.push_back("c" + std::to_string(p));
  for (int g = 0; g < truth.G; ++g) {
    for (int j = 0; j < J; ++j) {
      const std::size_t e = static_cast<std::size_t>(g) * J + j;
      auto row = edge_cells(g, j, truth.R, truth.L);
      row.push_back(csv::format(truth.band(j)));
      row.push_back(csv::format(truth.true_edges[e] != 0));
      for (int p = 0; p < truth.P; ++p) row.push_back(csv::format(truth.true_covariate_effects[e * truth.P + p] != 0));
      t.rows.push_back(std::move(row));
    }
  }
  csv::write(dir / "truth.csv", t);

  csv::Table f;
  f.header = {"j", "source", "lag", "target", "band", "p1", "p2", "sign"};
  for (int j = 0; j < J; ++j) {
    const CoefficientIndex idx = unflatten(j + 1, truth.R, truth.L);
    const BankFunction& b = truth.bank[j];
    f.rows.push_back({csv::format(j + 1), csv::format(idx.source), csv::format(idx.lag), csv::format(idx.target),
                      csv::format(b.band), csv::format(b.p1 + 1), csv::format(b.p2 + 1), csv::format(b.sign)});
  }
  csv::write(dir / "truth_functions.csv", f);

  csv::Table gv;
  gv.header = {"group", "j", "subject_id", "value"};
  csv::Table sc;
  sc.header = {"subject_id", "j", "value"};
  for (std::size_t s = 0; s < subjects.size(); ++s) {
    const SubjectDataset& d = subjects[s];
    for (int j = 0; j < J; ++j) {
      gv.rows.push_back({csv::format(d.group), csv::format(j + 1), csv::format(d.subject_id),
                         csv::format(truth.group_function(d.group - 1, j, d.covariates))});
      sc.rows.push_back({csv::format(d.subject_id), csv::format(j + 1),
                         csv::format(truth.subject_coefs(static_cast<Eigen::Index>(s), j))});
    }
  }
  csv::write(dir / "truth_group_values.csv", gv);
  csv::write(dir / "truth_subject_coefs.csv", sc);
}

TruthTables read_truth(const fs::path& dir) {
  const fs::path tp = dir / "truth.csv";
  const csv::Table t = csv::read(tp);
  TruthTables out;
  const std::size_t c_group = t.column("group"), c_j = t.column("j"), c_src = t.column("source"),
                    c_lag = t.column("lag"), c_band = t.column("band"), c_edge = t.column("edge");
  std::vector<std::size_t> c_cov;
  for (int p = 1;; ++p) {
    const auto it = std::find(t.header.begin(), t.header.end(), "c" + std::to_string(p));
    if (it == t.header.end()) break;
    c_cov.push_back(static_cast<std::size_t>(it - t.header.begin()));
  }
  out.P = static_cast<int>(c_cov.size());
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    out.G = std::max<int>(out.G, static_cast<int>(csv::parse_long(t.rows[i][c_group], where(tp, i))));
    out.R = std::max<int>(out.R, static_cast<int>(csv::parse_long(t.rows[i][c_src], where(tp, i))));
    out.L = std::max<int>(out.L, static_cast<int>(csv::parse_long(t.rows[i][c_lag], where(tp, i))));
  }
  const int J = out.J();
  require(static_cast<int>(t.rows.size()) == out.G * J, tp.string() + ": expected one row per (group, j)");
  out.band.assign(J, -1);
  out.edges.assign(static_cast<std::size_t>(out.G) * J, false);
  out.covariate_effects.assign(out.edges.size() * out.P, false);
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& row = t.rows[i];
    const int g = static_cast<int>(csv::parse_long(row[c_group], where(tp, i))) - 1;
    const int j = static_cast<int>(csv::parse_long(row[c_j], where(tp, i))) - 1;
    require(g >= 0 && j >= 0 && j < J, where(tp, i) + ": index out of range");
    const std::size_t e = static_cast<std::size_t>(g) * J + j;
    out.band[j] = static_cast<int>(csv::parse_long(row[c_band], where(tp, i)));
    out.edges[e] = csv::parse_bool(row[c_edge], where(tp, i));
    for (int p = 0; p < out.P; ++p) out.covariate_effects[e * out.P + p] = csv::parse_bool(row[c_cov[p]], where(tp, i));
  }

  const fs::path vp = dir / "truth_group_values.csv";
  if (fs::exists(vp)) {
    const csv::Table v = csv::read(vp);
    const std::size_t vg = v.column("group"), vj = v.column("j"), vs = v.column("subject_id"), vv = v.column("value");
    for (std::size_t i = 0; i < v.rows.size(); ++i) {
      const int g = static_cast<int>(csv::parse_long(v.rows[i][vg], where(vp, i))) - 1;
      const int j = static_cast<int>(csv::parse_long(v.rows[i][vj], where(vp, i))) - 1;
      const int s = static_cast<int>(csv::parse_long(v.rows[i][vs], where(vp, i)));
      out.group_values[{g, j}][s] = csv::parse_double(v.rows[i][vv], where(vp, i));
    }
  }
  return out;
}

TruthTables truth_tables(const SimTruth& truth, std::span<const SubjectDataset> subjects) {
  TruthTables out;
  out.R = truth.R;
  out.L = truth.L;
  out.G = truth.G;
  out.P = truth.P;
  const int J = truth.J();
  for (int j = 0; j < J; ++j) out.band.push_back(truth.band(j));
  out.edges.assign(truth.true_edges.begin(), truth.true_edges.end());
  out.covariate_effects.assign(truth.true_covariate_effects.begin(), truth.true_covariate_effects.end());
  for (const auto& s : subjects) {
    for (int j = 0; j < J; ++j) out.group_values[{s.group - 1, j}][s.subject_id] = truth.group_function(s.group - 1, j, s.covariates);
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

template <class T>
void take(const json& j, const char* key, T& field, std::set<std::string>& used) {
  if (!j.contains(key)) return;
  used.insert(key);
  try {
    field = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ValidationError(std::string("config field '") + key + "': " + e.what());
  }
}

}  // namespace

RunConfig parse_config(const json& j) {
  require(j.is_object(), "config must be a JSON object");
  RunConfig c;
  std::set<std::string> used;
  ModelConfig& m = c.model;
  take(j, "L", m.L, used);
  take(j, "pi_delta", m.pi_delta, used);
  take(j, "pi_phi", m.pi_phi, used);
  take(j, "sigma2_w", m.sigma2_w, used);
  take(j, "sigma2_mu", m.sigma2_mu, used);
  take(j, "a0", m.a0, used);
  take(j, "b0", m.b0, used);
  take(j, "a1", m.a1, used);
  take(j, "b1", m.b1, used);
  take(j, "a_xi", m.a_xi, used);
  take(j, "b_xi", m.b_xi, used);
  take(j, "kernel_lengthscale", m.kernel_lengthscale, used);
  take(j, "kernel_variance", m.kernel_variance, used);
  take(j, "jitter_scale", m.jitter_scale, used);
  take(j, "intercept_only", m.intercept_only, used);

  SimConfig& s = c.sim;
  s.L = m.L;
  take(j, "R", s.R, used);
  take(j, "T", s.T, used);
  take(j, "group_sizes", s.group_sizes, used);
  take(j, "P", s.P, used);
  take(j, "noise_var", s.noise_var, used);
  take(j, "init_var", s.init_var, used);
  take(j, "subject_coef_var", s.subject_coef_var, used);
  take(j, "dropout_prob", s.dropout_prob, used);
  take(j, "sign_flip_prob", s.sign_flip_prob, used);
  take(j, "seed", s.seed, used);
  take(j, "max_rejections", s.max_rejections, used);

  FitOptions& f = c.fit;
  take(j, "max_sweeps", f.max_sweeps, used);
  take(j, "rel_tol", f.rel_tol, used);
  take(j, "patience", f.patience, used);
  take(j, "cold_start_sweeps", f.cold_start_sweeps, used);
  take(j, "prioritize", f.prioritize, used);
  take(j, "edge_threshold", c.edge_threshold, used);
  take(j, "covariate_threshold", c.covariate_threshold, used);
  take(j, "fdr_q", c.fdr_q, used);

  if (j.contains("binary_covariates")) {
    used.insert("binary_covariates");
    const json& b = j.at("binary_covariates");
    require(b.is_object(), "config field 'binary_covariates' must map column numbers to booleans");
    for (const auto& [k, v] : b.items()) {
      int col = 0;
      try {
        std::size_t pos = 0;
        col = std::stoi(k, &pos);
        require(pos == k.size(), "");
      } catch (...) {
        throw ValidationError("config field 'binary_covariates': key '" + k + "' is not a column number");
      }
      require(col >= 1, "config field 'binary_covariates': columns are 1-based");
      require(v.is_boolean(), "config field 'binary_covariates': value for column " + k + " must be boolean");
      c.binary_covariates[col] = v.get<bool>();
    }
  }

  for (const auto& [k, v] : j.items()) {
    require(used.count(k) > 0, "unknown config field '" + k + "'");
  }
  require(f.max_sweeps >= 1, "config field 'max_sweeps' must be >= 1");
  require(f.rel_tol > 0, "config field 'rel_tol' must be positive");
  require(f.patience >= 1, "config field 'patience' must be >= 1");
  require(f.cold_start_sweeps >= 1, "config field 'cold_start_sweeps' must be >= 1");
  require(c.edge_threshold >= 0 && c.edge_threshold <= 1, "config field 'edge_threshold' must lie in [0,1]");
  require(c.covariate_threshold >= 0 && c.covariate_threshold <= 1,
          "config field 'covariate_threshold' must lie in [0,1]");
  require(c.fdr_q > 0 && c.fdr_q <= 1, "config field 'fdr_q' must lie in (0,1]");
  ModelConfig dims = m;
  dims.R = s.R;
  dims.G = s.G();
  dims.P = s.P;
  dims.validate();
  s.validate();
  return c;
}

RunConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  require(in.good(), "cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
  try {
    return parse_config(j);
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

json to_json(const RunConfig& c) {
  const ModelConfig& m = c.model;
  const SimConfig& s = c.sim;
  const FitOptions& f = c.fit;
  json j = {
      {"L", m.L}, {"pi_delta", m.pi_delta}, {"pi_phi", m.pi_phi}, {"sigma2_w", m.sigma2_w},
      {"sigma2_mu", m.sigma2_mu}, {"a0", m.a0}, {"b0", m.b0}, {"a1", m.a1}, {"b1", m.b1},
      {"a_xi", m.a_xi}, {"b_xi", m.b_xi}, {"kernel_lengthscale", m.kernel_lengthscale},
      {"kernel_variance", m.kernel_variance}, {"jitter_scale", m.jitter_scale},
      {"intercept_only", m.intercept_only}, {"R", s.R}, {"T", s.T}, {"group_sizes", s.group_sizes},
      {"P", s.P}, {"noise_var", s.noise_var}, {"init_var", s.init_var},
      {"subject_coef_var", s.subject_coef_var}, {"dropout_prob", s.dropout_prob},
      {"sign_flip_prob", s.sign_flip_prob}, {"seed", s.seed}, {"max_rejections", s.max_rejections},
      {"max_sweeps", f.max_sweeps}, {"rel_tol", f.rel_tol}, {"patience", f.patience},
      {"cold_start_sweeps", f.cold_start_sweeps}, {"prioritize", f.prioritize},
      {"edge_threshold", c.edge_threshold}, {"covariate_threshold", c.covariate_threshold},
      {"fdr_q", c.fdr_q}};
  json b = json::object();
  for (const auto& [col, v] : c.binary_covariates) b[std::to_string(col)] = v;
  j["binary_covariates"] = b;
  return j;
}

// ---------------------------------------------------------------------------

CovariateScaling rescale_covariates(std::vector<SubjectDataset>& subjects, const std::map<int, bool>& binary_override) {
  require(!subjects.empty(), "no subjects");
  const int P = subjects.front().P();
  for (const auto& [col, v] : binary_override) {
    require(col >= 1 && col <= P, "binary_covariates: column " + std::to_string(col) + " out of range");
  }
  CovariateScaling sc;
  sc.binary.assign(P, false);
  sc.lo.assign(P, 0.0);
  sc.hi.assign(P, 0.0);
  for (int p = 0; p < P; ++p) {
    std::set<double> distinct;
    double lo = INFINITY, hi = -INFINITY;
    for (const auto& s : subjects) {
      const double v = s.covariates(p);
      if (distinct.size() <= 2) distinct.insert(v);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    sc.lo[p] = lo;
    sc.hi[p] = hi;
    const auto it = binary_override.find(p + 1);
    sc.binary[p] = it != binary_override.end() ? it->second : distinct.size() == 2;
    if (sc.binary[p] || hi == lo) continue;
    for (auto& s : subjects) s.covariates(p) = 2.0 * (s.covariates(p) - lo) / (hi - lo) - 1.0;
  }
  return sc;
}

// ---------------------------------------------------------------------------

void write_fit_result(const fs::path& dir, const FitResult& r, std::span<const SubjectDataset> subjects, int R,
                      int L) {
  const int J = n_coefficients(R, L);
  const int G = r.config_echo.G;
  const int P = r.config_echo.P;

  csv::Table edges;
  edges.header = with_edge_header({"gamma_delta", "selected"});
  for (int g = 0; g < G; ++g) {
    for (int j = 0; j < J; ++j) {
      const std::size_t e = static_cast<std::size_t>(g) * J + j;
      auto row = edge_cells(g, j, R, L);
      row.push_back(csv::format(r.gamma_delta[e]));
      row.push_back(csv::format(static_cast<bool>(r.edges[e])));
      edges.rows.push_back(std::move(row));
    }
  }
  csv::write(dir / "edges.csv", edges);

  csv::Table cov;
  cov.header = with_edge_header({"covariate", "gamma_phi", "selected"});
  if (!r.covariate_effects.empty()) {
    for (int g = 0; g < G; ++g) {
      for (int j = 0; j < J; ++j) {
        for (int p = 0; p < P; ++p) {
          const std::size_t k = (static_cast<std::size_t>(g) * J + j) * P + p;
          auto row = edge_cells(g, j, R, L);
          row.push_back(csv::format(p + 1));
          row.push_back(csv::format(r.gamma_phi[k]));
          row.push_back(csv::format(static_cast<bool>(r.covariate_effects[k])));
          cov.rows.push_back(std::move(row));
        }
      }
    }
  }
  csv::write(dir / "covariate_effects.csv", cov);

  std::vector<std::vector<int>> ids(G);
  for (const auto& s : subjects) ids[s.group - 1].push_back(s.subject_id);
  csv::Table gf;
  gf.header = with_edge_header({"subject_id", "value"});
  for (int g = 0; g < G; ++g) {
    for (int j = 0; j < J; ++j) {
      const Eigen::VectorXd& v = r.group_functions[static_cast<std::size_t>(g) * J + j];
      for (std::size_t i = 0; i < ids[g].size(); ++i) {
        auto row = edge_cells(g, j, R, L);
        row.push_back(csv::format(ids[g][i]));
        row.push_back(csv::format(v(static_cast<Eigen::Index>(i))));
        gf.rows.push_back(std::move(row));
      }
    }
  }
  csv::write(dir / "group_functions.csv", gf);

  csv::Table ss;
  ss.header = {"subject_id", "group", "j", "source", "lag", "target", "value"};
  for (std::size_t s = 0; s < subjects.size(); ++s) {
    for (int j = 0; j < J; ++j) {
      const CoefficientIndex idx = unflatten(j + 1, R, L);
      ss.rows.push_back({csv::format(subjects[s].subject_id), csv::format(subjects[s].group), csv::format(j + 1),
                         csv::format(idx.source), csv::format(idx.lag), csv::format(idx.target),
                         csv::format(r.subject_strengths(static_cast<Eigen::Index>(s), j))});
    }
  }
  csv::write(dir / "subject_strengths.csv", ss);

  csv::Table elbo;
  elbo.header = {"sweep", "elbo"};
  for (std::size_t i = 0; i < r.elbo_trace.values.size(); ++i) {
    elbo.rows.push_back({csv::format(static_cast<long>(i + 1)), csv::format(r.elbo_trace.values[i])});
  }
  csv::write(dir / "elbo.csv", elbo);
}

SelectionTables read_selections(const fs::path& dir, int G, int J, int P) {
  SelectionTables out;
  out.G = G;
  out.J = J;
  out.P = P;
  const fs::path ep = dir / "edges.csv";
  const csv::Table e = csv::read(ep);
  const std::size_t eg = e.column("group"), ej = e.column("j"), es = e.column("selected");
  require(static_cast<int>(e.rows.size()) == G * J, ep.string() + ": " + std::to_string(e.rows.size()) +
                                                        " rows, truth has " + std::to_string(G * J) + " edges");
  out.edges.assign(static_cast<std::size_t>(G) * J, false);
  for (std::size_t i = 0; i < e.rows.size(); ++i) {
    const long g = csv::parse_long(e.rows[i][eg], where(ep, i)) - 1;
    const long j = csv::parse_long(e.rows[i][ej], where(ep, i)) - 1;
    require(g >= 0 && g < G && j >= 0 && j < J, where(ep, i) + ": edge index outside the truth dimensions");
    out.edges[g * J + j] = csv::parse_bool(e.rows[i][es], where(ep, i));
  }

  const fs::path cp = dir / "covariate_effects.csv";
  if (fs::exists(cp)) {
    const csv::Table c = csv::read(cp);
    out.has_covariates = true;
    out.covariate_effects.assign(out.edges.size() * P, false);
    if (!c.rows.empty()) {
      const std::size_t cg = c.column("group"), cj = c.column("j"), cc = c.column("covariate"),
                        cs = c.column("selected");
      for (std::size_t i = 0; i < c.rows.size(); ++i) {
        const long g = csv::parse_long(c.rows[i][cg], where(cp, i)) - 1;
        const long j = csv::parse_long(c.rows[i][cj], where(cp, i)) - 1;
        const long p = csv::parse_long(c.rows[i][cc], where(cp, i)) - 1;
        require(g >= 0 && g < G && j >= 0 && j < J && p >= 0 && p < P,
                where(cp, i) + ": covariate index outside the truth dimensions");
        out.covariate_effects[(g * J + j) * P + p] = csv::parse_bool(c.rows[i][cs], where(cp, i));
      }
    }
  }

  const fs::path fp = dir / "group_functions.csv";
  if (fs::exists(fp)) {
    const csv::Table f = csv::read(fp);
    const std::size_t fg = f.column("group"), fj = f.column("j"), fs_ = f.column("subject_id"), fv = f.column("value");
    for (std::size_t i = 0; i < f.rows.size(); ++i) {
      const int g = static_cast<int>(csv::parse_long(f.rows[i][fg], where(fp, i))) - 1;
      const int j = static_cast<int>(csv::parse_long(f.rows[i][fj], where(fp, i))) - 1;
      const int s = static_cast<int>(csv::parse_long(f.rows[i][fs_], where(fp, i)));
      out.group_values[{g, j}][s] = csv::parse_double(f.rows[i][fv], where(fp, i));
    }
  }
  return out;
}

SelectionTables selection_tables(const FitResult& r, std::span<const SubjectDataset> subjects) {
  SelectionTables out;
  out.G = r.config_echo.G;
  out.P = r.config_echo.P;
  out.J = out.G > 0 ? static_cast<int>(r.edges.size()) / out.G : 0;
  out.edges = r.edges;
  out.has_covariates = true;
  out.covariate_effects = r.covariate_effects;
  if (out.covariate_effects.empty()) out.covariate_effects.assign(r.edges.size() * out.P, false);
  std::vector<std::vector<int>> ids(out.G);
  for (const auto& s : subjects) ids[s.group - 1].push_back(s.subject_id);
  for (int g = 0; g < out.G; ++g) {
    for (int j = 0; j < out.J; ++j) {
      const Eigen::VectorXd& v = r.group_functions[static_cast<std::size_t>(g) * out.J + j];
      for (std::size_t i = 0; i < ids[g].size(); ++i) out.group_values[{g, j}][ids[g][i]] = v(static_cast<Eigen::Index>(i));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "cannot open " + path.string());
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1) {
    EVP_MD_CTX_free(ctx);
    throw std::runtime_error("sha256: digest init failed");
  }
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof buf);
    if (in.gcount() > 0) EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(in.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  return hex.str();
}

std::string timestamp_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_manifest(const fs::path& dir, const RunManifest& m) {
  json inputs = json::array();
  for (const auto& [path, hash] : m.inputs) inputs.push_back({{"path", path}, {"sha256", hash}});
  json out = {{"command", m.command}, {"version", kVersion}, {"seed", m.seed},     {"config", m.config},
              {"inputs", inputs},     {"started", m.started}, {"finished", m.finished}, {"outputs", m.outputs},
              {"extra", m.extra}};
  fs::create_directories(dir);
  std::ofstream f(dir / "manifest.json", std::ios::binary);
  require(f.good(), "cannot write " + (dir / "manifest.json").string());
  f << out.dump(2) << '\n';
}

}  // namespace vevar::io

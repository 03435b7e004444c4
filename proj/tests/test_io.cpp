#include "vevar/commands.hpp"
#include "vevar/csv.hpp"
#include "vevar/error.hpp"
#include "vevar/io.hpp"

#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <limits>
#include <random>

using namespace vevar;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("vevar_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

Study tiny_study() {
  SimConfig sim;
  sim.R = 4;
  sim.T = 60;
  sim.group_sizes = {6, 7};
  return simulate_study(sim);
}

}  // namespace

TEST_SUITE("csv") {

TEST_CASE("doubles survive a text round trip exactly") {
  std::mt19937_64 rng(61);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int i = 0; i < 1000; ++i) {
    const double v = i % 2 ? u(rng) : u(rng) * 1e-300;
    CHECK(csv::parse_double(csv::format(v), "t") == v);
  }
  CHECK(csv::format(0.5) == "0.5");
  CHECK(std::isnan(csv::parse_double(csv::format(std::nan("")), "t")));
  CHECK(csv::parse_double(csv::format(std::numeric_limits<double>::infinity()), "t") ==
        std::numeric_limits<double>::infinity());
}

TEST_CASE("strict parsing") {
  CHECK_THROWS_AS(csv::parse_double("1.5x", "t"), ValidationError);
  CHECK_THROWS_AS(csv::parse_double("", "t"), ValidationError);
  CHECK_THROWS_AS(csv::parse_long("2.5", "t"), ValidationError);
  CHECK(csv::parse_bool("true", "t"));
  CHECK_FALSE(csv::parse_bool("0", "t"));
  CHECK_THROWS_AS(csv::parse_bool("yes", "t"), ValidationError);
}

TEST_CASE("table round trip and ragged rows") {
  const fs::path dir = scratch("csv");
  csv::Table t{{"a", "b"}, {{"1", "x"}, {"2", "y"}}};
  csv::write(dir / "sub" / "t.csv", t);
  const csv::Table back = csv::read(dir / "sub" / "t.csv");
  CHECK(back.header == t.header);
  CHECK(back.rows == t.rows);
  CHECK(back.column("b") == 1);
  CHECK_THROWS_AS(back.column("c"), ValidationError);
  std::ofstream(dir / "bad.csv") << "a,b\n1\n";
  CHECK_THROWS_AS(csv::read(dir / "bad.csv"), ValidationError);
  CHECK_THROWS_AS(csv::read(dir / "missing.csv"), ValidationError);
}

}

TEST_SUITE("io") {

TEST_CASE("dataset round trip") {
  const Study st = tiny_study();
  const fs::path dir = scratch("data");
  io::write_dataset(dir, st.subjects);
  const auto back = io::read_dataset(dir);
  REQUIRE(back.size() == st.subjects.size());
  for (std::size_t s = 0; s < back.size(); ++s) {
    CHECK(back[s].subject_id == st.subjects[s].subject_id);
    CHECK(back[s].group == st.subjects[s].group);
    CHECK(back[s].series == st.subjects[s].series);
    CHECK(back[s].covariates == st.subjects[s].covariates);
  }
  CHECK(io::dataset_files(dir).front().filename() == "subjects.csv");
}

TEST_CASE("truth round trip matches the in-memory tables") {
  const Study st = tiny_study();
  const fs::path dir = scratch("truth");
  io::write_truth(dir, st.truth, st.subjects);
  const io::TruthTables a = io::read_truth(dir);
  const io::TruthTables b = io::truth_tables(st.truth, st.subjects);
  CHECK(a.R == b.R);
  CHECK(a.G == b.G);
  CHECK(a.band == b.band);
  CHECK(a.edges == b.edges);
  CHECK(a.covariate_effects == b.covariate_effects);
  CHECK(a.group_values == b.group_values);
}

TEST_CASE("fit results round trip and score perfectly against themselves") {
  const Study st = tiny_study();
  const PreparedData data(st.subjects, ModelConfig{});
  FitOptions fo;
  fo.max_sweeps = 20;
  fo.prioritize = false;
  const FitResult r = summarize_fit(data, fit_model(data, fo));
  const fs::path dir = scratch("fit");
  io::write_fit_result(dir, r, st.subjects, data.R(), data.L());
  const io::SelectionTables a = io::read_selections(dir, data.G(), data.J(), data.P());
  const io::SelectionTables b = io::selection_tables(r, st.subjects);
  CHECK(a.edges == b.edges);
  CHECK(a.covariate_effects == b.covariate_effects);
  CHECK(a.group_values == b.group_values);
  CHECK_THROWS_AS(io::read_selections(dir, data.G() + 1, data.J(), data.P()), ValidationError);

  io::TruthTables self = io::truth_tables(st.truth, st.subjects);
  self.edges = a.edges;
  self.covariate_effects = a.covariate_effects;
  for (const auto& row : cli::score_selections(a, self)) {
    CHECK(row.counts.fp == 0);
    CHECK(row.counts.fn == 0);
  }
}

TEST_CASE("config parsing") {
  const auto c = io::parse_config(nlohmann::json::parse(R"({"pi_delta": 0.5, "T": 120, "group_sizes": [10, 20],
                                                              "binary_covariates": {"2": true}})"));
  CHECK(c.model.pi_delta == 0.5);
  CHECK(c.sim.T == 120);
  CHECK(c.sim.group_sizes == std::vector<int>{10, 20});
  CHECK(c.binary_covariates.at(2));
  const auto again = io::parse_config(io::to_json(c));
  CHECK(io::to_json(again) == io::to_json(c));

  CHECK_THROWS_AS(io::parse_config(nlohmann::json::parse(R"({"pi_dleta": 0.5})")), ValidationError);
  CHECK_THROWS_AS(io::parse_config(nlohmann::json::parse(R"({"pi_delta": "high"})")), ValidationError);
  CHECK_THROWS_AS(io::parse_config(nlohmann::json::parse(R"({"pi_delta": 1.5})")), ValidationError);
  CHECK_THROWS_AS(io::parse_config(nlohmann::json::parse("[1]")), ValidationError);
}

TEST_CASE("covariate rescaling") {
  Study st = tiny_study();
  auto subjects = st.subjects;
  const io::CovariateScaling sc = io::rescale_covariates(subjects);
  CHECK(sc.binary[5]);
  CHECK_FALSE(sc.binary[0]);
  double lo = 1, hi = -1;
  for (const auto& s : subjects) {
    lo = std::min(lo, s.covariates(0));
    hi = std::max(hi, s.covariates(0));
    CHECK(s.covariates(5) == st.subjects[&s - subjects.data()].covariates(5));
  }
  CHECK(lo == doctest::Approx(-1.0));
  CHECK(hi == doctest::Approx(1.0));
  auto forced = st.subjects;
  CHECK_FALSE(io::rescale_covariates(forced, {{6, false}}).binary[5]);
}

TEST_CASE("sha256 and manifest") {
  const fs::path dir = scratch("sha");
  std::ofstream(dir / "abc.txt", std::ios::binary) << "abc";
  CHECK(io::sha256_file(dir / "abc.txt") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  io::RunManifest m;
  m.command = "test";
  m.seed = 9;
  m.inputs.emplace_back("abc.txt", io::sha256_file(dir / "abc.txt"));
  io::write_manifest(dir, m);
  const auto j = nlohmann::json::parse(slurp(dir / "manifest.json"));
  CHECK(j.at("version") == io::kVersion);
  CHECK(j.at("seed") == 9);
}

}

TEST_SUITE("cli") {

TEST_CASE("simulate, fit, baseline and score write byte-stable outputs") {
  const fs::path root = scratch("cli");
  const fs::path cfg = root / "cfg.json";
  std::ofstream(cfg) << R"({"R": 4, "T": 60, "group_sizes": [6, 7], "max_sweeps": 20, "cold_start_sweeps": 3})";
  cli::cmd_simulate({cfg, root / "sim", 5});
  for (const char* run : {"a", "b"}) {
    cli::FitArgs f;
    f.data = root / "sim";
    f.config = cfg;
    f.out = root / run / "fit";
    f.threads = run[0] == 'a' ? 1 : 3;
    cli::cmd_fit(f);
    cli::BaselineArgs b;
    b.data = root / "sim";
    b.config = cfg;
    b.out = root / run / "gc";
    b.threads = f.threads;
    cli::cmd_baseline(b);
    cli::cmd_score({root / run / "fit", root / "sim", root / run / "score"});
  }
  for (const char* file : {"fit/edges.csv", "fit/covariate_effects.csv", "fit/group_functions.csv",
                           "fit/subject_strengths.csv", "fit/elbo.csv", "gc/edges.csv",
                           "gc/covariate_effects.csv", "score/metrics.csv"}) {
    INFO(file);
    CHECK(slurp(root / "a" / file) == slurp(root / "b" / file));
  }
  const csv::Table m = csv::read(root / "a" / "score" / "metrics.csv");
  CHECK(m.rows.size() == 4);
}

TEST_CASE("thread count resolution") {
  ::unsetenv("VEVAR_THREADS");
  CHECK(cli::resolve_threads(3) == 3);
  ::setenv("VEVAR_THREADS", "2", 1);
  CHECK(cli::resolve_threads(3) == 2);
  ::setenv("VEVAR_THREADS", "zero", 1);
  CHECK_THROWS_AS(cli::resolve_threads(0), ValidationError);
  ::unsetenv("VEVAR_THREADS");
}

TEST_CASE("sweep rejects bad requests") {
  cli::SweepArgs s;
  s.parameter = "pi_delta";
  s.out = scratch("sweep") / "s.csv";
  CHECK_THROWS_AS(cli::cmd_sweep(s), ValidationError);
  s.values = {0.2};
  s.parameter = "lengthscale";
  CHECK_THROWS_AS(cli::cmd_sweep(s), ValidationError);
}

}

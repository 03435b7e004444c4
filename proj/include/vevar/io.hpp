#pragma once

#include "vevar/engine.hpp"
#include "vevar/selector.hpp"
#include "vevar/simulator.hpp"

#include <json.hpp>

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace vevar::io {

namespace fs = std::filesystem;

inline constexpr const char* kVersion = "0.1.0";

// ---------------------------------------------------------------------------
// Datasets: <dir>/subjects.csv (subject_id, group, m1..mP) and
// <dir>/series/subject_<id>.csv (header x1..xR, T rows).

void write_dataset(const fs::path& dir, std::span<const SubjectDataset> subjects);
std::vector<SubjectDataset> read_dataset(const fs::path& dir);

/// Files a dataset consists of, subjects.csv first.
std::vector<fs::path> dataset_files(const fs::path& dir);

// ---------------------------------------------------------------------------
// Simulation truth

/// truth.csv, truth_functions.csv, truth_group_values.csv, truth_subject_coefs.csv.
void write_truth(const fs::path& dir, const SimTruth& truth, std::span<const SubjectDataset> subjects);

struct TruthTables {
  int R = 0, L = 1, G = 0, P = 0;
  std::vector<int> band;                     // per j
  std::vector<bool> edges;                   // per g*J + j
  std::vector<bool> covariate_effects;       // per (g*J + j)*P + p
  std::map<std::pair<int, int>, std::map<int, double>> group_values;  // (g, j) -> subject_id -> f

  int J() const { return R * L * R; }
};
TruthTables read_truth(const fs::path& dir);
TruthTables truth_tables(const SimTruth& truth, std::span<const SubjectDataset> subjects);

// ---------------------------------------------------------------------------
// Configuration: one flat JSON object. Unknown keys are rejected.

struct RunConfig {
  ModelConfig model;
  SimConfig sim;
  FitOptions fit;
  double edge_threshold = 0.5;
  double covariate_threshold = 0.5;
  double fdr_q = 0.05;
  /// 1-based covariate column -> treat as binary (true) or continuous (false).
  std::map<int, bool> binary_covariates;
};

RunConfig parse_config(const nlohmann::json& j);
RunConfig load_config(const fs::path& path);
nlohmann::json to_json(const RunConfig& c);

// ---------------------------------------------------------------------------
// Covariate scaling

struct CovariateScaling {
  std::vector<bool> binary;
  std::vector<double> lo, hi;
};

/// Columns with exactly two distinct values are binary unless overridden;
/// the others are min-max mapped onto [-1, 1] over all subjects.
CovariateScaling rescale_covariates(std::vector<SubjectDataset>& subjects,
                                    const std::map<int, bool>& binary_override = {});

// ---------------------------------------------------------------------------
// Results

void write_fit_result(const fs::path& dir, const FitResult& result, std::span<const SubjectDataset> subjects,
                      int R, int L);

/// Selections read back from edges.csv / covariate_effects.csv / group_functions.csv.
struct SelectionTables {
  int G = 0, J = 0, P = 0;
  std::vector<bool> edges;
  bool has_covariates = false;
  std::vector<bool> covariate_effects;
  std::map<std::pair<int, int>, std::map<int, double>> group_values;
};
/// Dimensions come from the truth the tables are scored against.
SelectionTables read_selections(const fs::path& dir, int G, int J, int P);
SelectionTables selection_tables(const FitResult& result, std::span<const SubjectDataset> subjects);

// ---------------------------------------------------------------------------
// Manifest

std::string sha256_file(const fs::path& path);
std::string timestamp_now();

struct RunManifest {
  std::string command;
  nlohmann::json config;
  std::uint64_t seed = 0;
  std::vector<std::pair<std::string, std::string>> inputs;  // path, sha256
  std::string started, finished;
  std::vector<std::string> outputs;
  nlohmann::json extra = nlohmann::json::object();
};
void write_manifest(const fs::path& dir, const RunManifest& m);

}  // namespace vevar::io

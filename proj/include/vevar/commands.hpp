#pragma once

#include "vevar/io.hpp"
#include "vevar/metrics.hpp"

#include <optional>
#include <string>
#include <vector>

namespace vevar::cli {

namespace fs = std::filesystem;

/// VEVAR_THREADS wins over the flag; 0 keeps the OpenMP default.
int resolve_threads(int flag);

struct SimulateArgs {
  std::optional<fs::path> config;
  fs::path out;
  std::optional<std::uint64_t> seed;
};
void cmd_simulate(const SimulateArgs& a);

struct FitArgs {
  fs::path data;
  std::optional<fs::path> config;
  fs::path out;
  bool intercept_only = false;
  std::optional<double> threshold;
  std::optional<int> max_sweeps;
  std::optional<std::uint64_t> seed;
  int threads = 0;
};
void cmd_fit(const FitArgs& a);

struct BaselineArgs {
  fs::path data;
  std::optional<fs::path> config;
  fs::path out;
  std::string stage2 = "lasso";
  std::optional<double> fdr_q;
  std::optional<std::uint64_t> seed;
  int threads = 0;
};
void cmd_baseline(const BaselineArgs& a);

struct ScoreArgs {
  fs::path fit;
  fs::path truth;  // directory or its truth.csv
  fs::path out;
};
void cmd_score(const ScoreArgs& a);

struct SweepArgs {
  std::optional<fs::path> config;
  std::string parameter;
  std::vector<double> values;
  int replicates = 25;
  fs::path out;
  int threads = 0;
};
void cmd_sweep(const SweepArgs& a);

// Library-level pieces shared with the tests.

/// Scores of one selection against truth for every group: edges, then
/// covariate effects when present.
struct GroupScores {
  int group = 0;  // 1-based
  std::string target;  // "edge" or "covariate"
  ConfusionCounts counts;
  SelectionScores scores;
  long selected = 0;
};
std::vector<GroupScores> score_selections(const io::SelectionTables& sel, const io::TruthTables& truth);

/// One replicate of simulate -> rescale -> fit -> score, entirely in memory.
std::vector<GroupScores> run_replicate(const io::RunConfig& cfg, std::uint64_t seed, bool parallel);

}  // namespace vevar::cli

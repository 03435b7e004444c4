#pragma once

#include "vevar/simulator.hpp"

#include <array>
#include <span>
#include <vector>

namespace vevar {

struct ConfusionCounts {
  long tp = 0, fp = 0, fn = 0, tn = 0;

  long total() const { return tp + fp + fn + tn; }
  ConfusionCounts& operator+=(const ConfusionCounts& o) {
    tp += o.tp; fp += o.fp; fn += o.fn; tn += o.tn;
    return *this;
  }
};

enum Metric { kTpr = 0, kFpr, kMcc, kF1, kAcc, kMetricCount };

/// TPR, FPR, MCC, F1, Acc. A metric whose denominator is zero is reported as
/// 0 with its `undefined` flag set.
struct SelectionScores {
  std::array<double, kMetricCount> value{};
  std::array<bool, kMetricCount> undefined{};
  /// Number of replicates contributing to each metric (1 for a single score).
  std::array<int, kMetricCount> count{};

  double tpr() const { return value[kTpr]; }
  double fpr() const { return value[kFpr]; }
  double mcc() const { return value[kMcc]; }
  double f1() const { return value[kF1]; }
  double acc() const { return value[kAcc]; }
};

ConfusionCounts score(std::span<const bool> selected, std::span<const bool> truth);
ConfusionCounts score(const std::vector<bool>& selected, const std::vector<bool>& truth);
SelectionScores compute_scores(const ConfusionCounts& c);
/// Per-metric mean over replicates, skipping undefined entries.
SelectionScores aggregate_replicates(std::span<const SelectionScores> scores);

/// Slices of a flat (g, ...) array belonging to group g.
std::vector<bool> group_slice(const std::vector<bool>& flat, int g, int per_group);
std::vector<bool> to_bools(const std::vector<std::uint8_t>& v);

/// Edge-selection TPR by generating band 0..7 for group g. Entry b is
/// undefined (flag) when no true edge has band b.
struct BandTpr {
  std::array<double, 8> tpr{};
  std::array<long, 8> positives{};
  std::array<long, 8> hits{};
};
BandTpr function_bank_tpr(const std::vector<bool>& edge_selection, const SimTruth& truth, int g);

/// Mean over edges of the per-edge mean squared error between estimated and
/// true group functions at the group's subjects. `include[e]` picks the edges.
/// Returns false (and leaves mse untouched) when no edge is included.
bool group_function_mse(std::span<const Eigen::VectorXd> estimated, std::span<const Eigen::VectorXd> truth,
                        const std::vector<bool>& include, double& mse);

/// True group function of every (g, j) at the group's subjects, in group order.
std::vector<Eigen::VectorXd> true_group_functions(const SimTruth& truth,
                                                  std::span<const SubjectDataset> subjects);

}  // namespace vevar

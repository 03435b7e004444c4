#include "vevar/metrics.hpp"

#include "vevar/error.hpp"

#include <cmath>

namespace vevar {

ConfusionCounts score(std::span<const bool> selected, std::span<const bool> truth) {
  require(selected.size() == truth.size(), "score: selection and truth are misaligned");
  ConfusionCounts c;
  for (std::size_t i = 0; i < selected.size(); ++i) {
    if (selected[i]) {
      truth[i] ? ++c.tp : ++c.fp;
    } else {
      truth[i] ? ++c.fn : ++c.tn;
    }
  }
  return c;
}

ConfusionCounts score(const std::vector<bool>& selected, const std::vector<bool>& truth) {
  require(selected.size() == truth.size(), "score: selection and truth are misaligned");
  ConfusionCounts c;
  for (std::size_t i = 0; i < selected.size(); ++i) {
    if (selected[i]) {
      truth[i] ? ++c.tp : ++c.fp;
    } else {
      truth[i] ? ++c.fn : ++c.tn;
    }
  }
  return c;
}

SelectionScores compute_scores(const ConfusionCounts& c) {
  SelectionScores s;
  s.count.fill(1);
  auto ratio = [&](Metric m, double num, double den) {
    if (den == 0.0) {
      s.value[m] = 0.0;
      s.undefined[m] = true;
    } else {
      s.value[m] = num / den;
    }
  };
  const double tp = c.tp, fp = c.fp, fn = c.fn, tn = c.tn;
  ratio(kTpr, tp, tp + fn);
  ratio(kFpr, fp, fp + tn);
  ratio(kMcc, tp * tn - fp * fn, std::sqrt((tp + fp) * (tp + fn) * (tn + fp) * (tn + fn)));
  ratio(kF1, 2 * tp, 2 * tp + fp + fn);
  ratio(kAcc, tp + tn, tp + tn + fp + fn);
  for (int m = 0; m < kMetricCount; ++m) {
    if (s.undefined[m]) s.count[m] = 0;
  }
  return s;
}

SelectionScores aggregate_replicates(std::span<const SelectionScores> scores) {
  require(!scores.empty(), "aggregate_replicates: no replicates");
  SelectionScores out;
  for (int m = 0; m < kMetricCount; ++m) {
    double sum = 0.0;
    int n = 0;
    for (const auto& s : scores) {
      if (s.undefined[m]) continue;
      sum += s.value[m];
      ++n;
    }
    out.count[m] = n;
    out.undefined[m] = n == 0;
    out.value[m] = n == 0 ? 0.0 : sum / n;
  }
  return out;
}

std::vector<bool> group_slice(const std::vector<bool>& flat, int g, int per_group) {
  require(flat.size() >= static_cast<std::size_t>(g + 1) * per_group, "group_slice: out of range");
  return {flat.begin() + static_cast<std::ptrdiff_t>(g) * per_group,
          flat.begin() + static_cast<std::ptrdiff_t>(g + 1) * per_group};
}

std::vector<bool> to_bools(const std::vector<std::uint8_t>& v) { return {v.begin(), v.end()}; }

BandTpr function_bank_tpr(const std::vector<bool>& edge_selection, const SimTruth& truth, int g) {
  const int J = truth.J();
  require(edge_selection.size() == static_cast<std::size_t>(truth.G) * J,
          "function_bank_tpr: selection does not match truth");
  BandTpr out;
  for (int j = 0; j < J; ++j) {
    const std::size_t e = static_cast<std::size_t>(g) * J + j;
    if (!truth.true_edges[e]) continue;
    const int b = truth.band(j);
    ++out.positives[b];
    if (edge_selection[e]) ++out.hits[b];
  }
  for (int b = 0; b < 8; ++b) {
    out.tpr[b] = out.positives[b] > 0 ? static_cast<double>(out.hits[b]) / out.positives[b] : 0.0;
  }
  return out;
}

bool group_function_mse(std::span<const Eigen::VectorXd> estimated, std::span<const Eigen::VectorXd> truth,
                        const std::vector<bool>& include, double& mse) {
  require(estimated.size() == truth.size() && include.size() == truth.size(),
          "group_function_mse: misaligned inputs");
  double sum = 0.0;
  long n = 0;
  for (std::size_t e = 0; e < truth.size(); ++e) {
    if (!include[e]) continue;
    require(estimated[e].size() == truth[e].size(), "group_function_mse: grid length mismatch");
    if (truth[e].size() == 0) continue;
    sum += (estimated[e] - truth[e]).squaredNorm() / static_cast<double>(truth[e].size());
    ++n;
  }
  if (n == 0) return false;
  mse = sum / static_cast<double>(n);
  return true;
}

std::vector<Eigen::VectorXd> true_group_functions(const SimTruth& truth,
                                                  std::span<const SubjectDataset> subjects) {
  const int J = truth.J();
  std::vector<std::vector<const SubjectDataset*>> members(truth.G);
  for (const auto& s : subjects) {
    require(s.group >= 1 && s.group <= truth.G, "true_group_functions: group out of range");
    members[s.group - 1].push_back(&s);
  }
  std::vector<Eigen::VectorXd> out(static_cast<std::size_t>(truth.G) * J);
  for (int g = 0; g < truth.G; ++g) {
    for (int j = 0; j < J; ++j) {
      Eigen::VectorXd v(static_cast<Eigen::Index>(members[g].size()));
      for (std::size_t i = 0; i < members[g].size(); ++i) {
        v(static_cast<Eigen::Index>(i)) = truth.group_function(g, j, members[g][i]->covariates);
      }
      out[static_cast<std::size_t>(g) * J + j] = std::move(v);
    }
  }
  return out;
}

}  // namespace vevar

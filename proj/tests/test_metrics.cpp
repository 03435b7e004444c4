#include "oracles.hpp"
#include "vevar/error.hpp"
#include "vevar/metrics.hpp"

#include <doctest.h>

#include <random>

using namespace vevar;

TEST_SUITE("metrics") {

TEST_CASE("formulas vs brute-force counting") {
  const auto r = oracle::metric_formulas(1000, 51);
  INFO(r.detail);
  CHECK(r.pass);
}

TEST_CASE("hand example") {
  const ConfusionCounts c{8, 2, 1, 9};
  const SelectionScores s = compute_scores(c);
  CHECK(s.tpr() == doctest::Approx(8.0 / 9));
  CHECK(s.fpr() == doctest::Approx(2.0 / 11));
  CHECK(s.mcc() == doctest::Approx((72.0 - 2.0) / std::sqrt(10.0 * 9 * 11 * 10)));
  CHECK(s.f1() == doctest::Approx(16.0 / 19));
  CHECK(s.acc() == doctest::Approx(17.0 / 20));
}

TEST_CASE("small worked case") {
  const SelectionScores s = compute_scores({3, 1, 1, 5});
  CHECK(s.tpr() == 0.75);
  CHECK(s.fpr() == doctest::Approx(1.0 / 6));
  CHECK(s.acc() == doctest::Approx(0.8));
  CHECK(s.f1() == doctest::Approx(0.75));
  CHECK(s.mcc() == doctest::Approx(14.0 / 24));
  const SelectionScores perfect = compute_scores({4, 0, 0, 6});
  CHECK(perfect.mcc() == 1.0);
  CHECK(perfect.f1() == 1.0);
}

TEST_CASE("MCC and accuracy are invariant under swapping the classes") {
  std::mt19937_64 rng(52);
  std::uniform_int_distribution<long> d(0, 50);
  for (int i = 0; i < 500; ++i) {
    const ConfusionCounts c{d(rng), d(rng), d(rng), d(rng)};
    const SelectionScores a = compute_scores(c), b = compute_scores({c.tn, c.fn, c.fp, c.tp});
    CHECK(a.mcc() == doctest::Approx(b.mcc()));
    CHECK(a.acc() == doctest::Approx(b.acc()));
    CHECK(a.mcc() >= -1.0);
    CHECK(a.mcc() <= 1.0);
  }
}

TEST_CASE("undefined metrics are flagged and skipped when averaging") {
  const SelectionScores none = compute_scores({0, 0, 0, 5});
  CHECK(none.undefined[kTpr]);
  CHECK(none.undefined[kMcc]);
  CHECK_FALSE(none.undefined[kFpr]);
  const SelectionScores some = compute_scores({3, 1, 1, 5});
  const SelectionScores both[] = {none, some};
  const SelectionScores agg = aggregate_replicates(both);
  CHECK(agg.tpr() == doctest::Approx(0.75));
  CHECK(agg.count[kTpr] == 1);
  CHECK(agg.fpr() == doctest::Approx((0.0 + 1.0 / 6) / 2));
  CHECK(agg.count[kFpr] == 2);
}

TEST_CASE("misaligned inputs") {
  CHECK_THROWS_AS(score(std::vector<bool>{true}, std::vector<bool>{true, false}), ValidationError);
}

TEST_CASE("band TPR and function MSE") {
  SimConfig sim;
  sim.group_sizes = {6, 6};
  const Study st = simulate_study(sim);
  std::vector<bool> truth = to_bools(st.truth.true_edges);
  const BandTpr all = function_bank_tpr(truth, st.truth, 1);
  for (int b = 0; b < 8; ++b) {
    if (all.positives[b]) CHECK(all.tpr[b] == 1.0);
  }
  const auto f = true_group_functions(st.truth, st.subjects);
  double mse = -1;
  CHECK(group_function_mse(f, f, truth, mse));
  CHECK(mse == 0.0);
  std::vector<Eigen::VectorXd> off = f;
  for (auto& v : off) v.array() += 0.1;
  CHECK(group_function_mse(off, f, truth, mse));
  CHECK(mse == doctest::Approx(0.01));
  CHECK_FALSE(group_function_mse(off, f, std::vector<bool>(truth.size(), false), mse));
}

}

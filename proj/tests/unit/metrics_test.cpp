#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "sqlsv/errors.hpp"
#include "sqlsv/metrics/metrics.hpp"

using namespace sqlsv;
using metrics::ScoredLabels;
namespace fx = sqlsv::testing;

namespace {

// Random instance on a coarse grid so ties are common.
ScoredLabels random_instance(std::mt19937_64& rng, bool both_classes) {
  for (;;) {
    ScoredLabels sl;
    const int n = 2 + static_cast<int>(rng() % 9);
    for (int i = 0; i < n; ++i) {
      sl.scores.push_back(static_cast<double>(rng() % 6) / 5.0);
      sl.labels.push_back(static_cast<int>(rng() % 2));
    }
    int pos = 0;
    for (int y : sl.labels) pos += y;
    if (pos > 0 && (!both_classes || pos < n)) return sl;
  }
}

}  // namespace

TEST(Auroc, Examples) {
  EXPECT_EQ(metrics::auroc({{0.9, 0.1}, {1, 0}}), 1.0);
  EXPECT_EQ(metrics::auroc({{0.8, 0.6, 0.4}, {1, 0, 1}}), 0.5);
  EXPECT_EQ(metrics::auroc({{0.3, 0.3, 0.3, 0.3}, {1, 0, 0, 1}}), 0.5);
  EXPECT_EQ(metrics::auroc({{0.1, 0.9}, {1, 0}}), 0.0);
}

TEST(Auroc, Errors) {
  EXPECT_THROW(metrics::auroc({{0.1, 0.2}, {1, 1}}), SingleClass);
  EXPECT_THROW(metrics::auroc({{0.1, 0.2}, {0, 0}}), SingleClass);
  EXPECT_THROW(metrics::auroc({{0.1}, {1, 0}}), InvalidArgument);
  EXPECT_THROW(metrics::auroc({{0.1, 0.2}, {1, 2}}), InvalidArgument);
  EXPECT_THROW(metrics::auroc({{}, {}}), InvalidArgument);
}

TEST(Auprc, Examples) {
  EXPECT_EQ(metrics::auprc({{0.9, 0.1}, {1, 0}}), 1.0);
  EXPECT_NEAR(metrics::auprc({{0.9, 0.8, 0.1}, {0, 1, 1}}), (0.5 + 2.0 / 3) / 2, 1e-15);
  EXPECT_EQ(metrics::auprc({{0.2, 0.7, 0.4}, {1, 1, 1}}), 1.0);
  EXPECT_THROW(metrics::auprc({{0.2, 0.7}, {0, 0}}), NoPositives);
}

TEST(Auprc, TiesBrokenByIndex) {
  // Equal scores rank by ascending index: [neg, pos] gives precision 1/2.
  EXPECT_EQ(metrics::auprc({{0.5, 0.5}, {0, 1}}), 0.5);
  EXPECT_EQ(metrics::auprc({{0.5, 0.5}, {1, 0}}), 1.0);
}

TEST(F1, Examples) {
  const ScoredLabels split{{0.9, 0.8, 0.2, 0.1}, {1, 1, 0, 0}};
  EXPECT_EQ(metrics::f1(split, 0.5), 1.0);
  EXPECT_EQ(metrics::f1(split, 0.95), 0.0);
  EXPECT_EQ(metrics::f1({{0.9, 0.1}, {0, 0}}, 0.5), 0.0);
  // threshold is inclusive
  EXPECT_EQ(metrics::f1(split, 0.8), 1.0);
  const ScoredLabels mixed{{0.8, 0.6, 0.4}, {1, 0, 1}};
  EXPECT_NEAR(metrics::f1(mixed, 0.5), fx::f1_confusion(mixed.scores, mixed.labels, 0.5), 1e-15);
  EXPECT_NEAR(metrics::f1(mixed, 0.5), 0.5, 1e-15);  // tp 1, fp 1, fn 1
}

TEST(Report, Fields) {
  const auto r = metrics::report({{0.9, 0.8, 0.1}, {0, 1, 1}}, 0.5);
  EXPECT_EQ(r.at("n").get<int>(), 3);
  EXPECT_EQ(r.at("n_pos").get<int>(), 2);
  EXPECT_EQ(r.at("threshold").get<double>(), 0.5);
  EXPECT_NEAR(r.at("auprc").get<double>(), 0.5833333, 1e-6);
  EXPECT_EQ(r.at("auroc").get<double>(), 0.0);  // the negative outranks both positives
  EXPECT_NEAR(r.at("f1_at_threshold").get<double>(), 0.5, 1e-15);
  EXPECT_EQ(r.size(), 6u);
}

TEST(MetricsProperty, MatchBruteForceOracles) {
  std::mt19937_64 rng(1000);
  for (int seed = 0; seed < 1000; ++seed) {
    const auto sl = random_instance(rng, true);
    EXPECT_EQ(metrics::auroc(sl), fx::auroc_pairwise(sl.scores, sl.labels));
    EXPECT_EQ(metrics::auprc(sl), fx::ap_enumerate(sl.scores, sl.labels));
    for (double t : {0.0, 0.3, 0.5, 1.0})
      EXPECT_NEAR(metrics::f1(sl, t), fx::f1_confusion(sl.scores, sl.labels, t), 1e-15);
  }
}

TEST(MetricsProperty, AurocInvariantUnderMonotoneTransform) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 500; ++trial) {
    const auto sl = random_instance(rng, true);
    ScoredLabels t1 = sl;
    ScoredLabels t2 = sl;
    for (auto& s : t1.scores) s = std::exp(3 * s) - 7;
    for (auto& s : t2.scores) s = 1 / (1 + std::exp(-10 * (s - 0.4)));
    EXPECT_EQ(metrics::auroc(t1), metrics::auroc(sl));
    EXPECT_EQ(metrics::auroc(t2), metrics::auroc(sl));
  }
}

TEST(MetricsProperty, PerfectRankerAndAllPositive) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 200; ++trial) {
    auto sl = random_instance(rng, true);
    for (std::size_t i = 0; i < sl.scores.size(); ++i)
      sl.scores[i] = sl.labels[i] + 0.01 * static_cast<double>(i % 3);
    EXPECT_EQ(metrics::auprc(sl), 1.0);
    EXPECT_EQ(metrics::auroc(sl), 1.0);
    for (auto& y : sl.labels) y = 1;
    EXPECT_EQ(metrics::auprc(sl), 1.0);
  }
}

#pragma once

#include <vector>

#include "json.hpp"

namespace sqlsv::metrics {

// Invalid pairs are the positive class (label 1).
struct ScoredLabels {
  std::vector<double> scores;
  std::vector<int> labels;
};

// Rank statistic (#(pos > neg) + 0.5 #(pos == neg)) / (P N). Throws SingleClass.
double auroc(const ScoredLabels& sl);

// Step-wise average precision over the ranking by descending score, ties
// broken by ascending index. Throws NoPositives.
double auprc(const ScoredLabels& sl);

// F1 of the positive class with predictions score >= threshold.
double f1(const ScoredLabels& sl, double threshold);

// {auprc, auroc, f1_at_threshold, threshold, n, n_pos}
nlohmann::json report(const ScoredLabels& sl, double threshold);

}  // namespace sqlsv::metrics

#include "sqlsv/metrics/metrics.hpp"

#include <algorithm>
#include <numeric>

#include "sqlsv/errors.hpp"

namespace sqlsv::metrics {

namespace {

void check_shape(const ScoredLabels& sl) {
  if (sl.scores.size() != sl.labels.size()) {
    throw InvalidArgument("scores and labels differ in length");
  }
  if (sl.scores.empty()) throw InvalidArgument("metrics need at least one instance");
  for (int y : sl.labels) {
    if (y != 0 && y != 1) throw InvalidArgument("labels must be 0 or 1");
  }
}

}  // namespace

double auroc(const ScoredLabels& sl) {
  check_shape(sl);
  const std::size_t n = sl.scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return sl.scores[a] < sl.scores[b]; });
  // Walk groups of tied scores in ascending order. Every positive beats all
  // negatives in lower groups and ties with the negatives in its own group.
  // Counts stay integral (in halves) so the result is exact before division.
  long long twice_wins = 0, neg_below = 0, pos = 0, neg = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    long long gp = 0, gn = 0;
    while (j < n && sl.scores[order[j]] == sl.scores[order[i]]) {
      (sl.labels[order[j]] == 1 ? gp : gn)++;
      ++j;
    }
    twice_wins += gp * (2 * neg_below + gn);
    neg_below += gn;
    pos += gp;
    neg += gn;
    i = j;
  }
  if (pos == 0 || neg == 0) throw SingleClass("AUROC needs both classes");
  return static_cast<double>(twice_wins) / (2.0 * static_cast<double>(pos) * static_cast<double>(neg));
}

double auprc(const ScoredLabels& sl) {
  check_shape(sl);
  const std::size_t n = sl.scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return sl.scores[a] > sl.scores[b]; });
  const long long total_pos = std::count(sl.labels.begin(), sl.labels.end(), 1);
  if (total_pos == 0) throw NoPositives("AUPRC needs at least one positive");
  double sum = 0.0;
  long long tp = 0;
  for (std::size_t rank = 0; rank < n; ++rank) {
    if (sl.labels[order[rank]] != 1) continue;
    ++tp;
    sum += static_cast<double>(tp) / static_cast<double>(rank + 1);
  }
  return sum / static_cast<double>(total_pos);
}

double f1(const ScoredLabels& sl, double threshold) {
  check_shape(sl);
  long long tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < sl.scores.size(); ++i) {
    const bool pred = sl.scores[i] >= threshold;
    const bool actual = sl.labels[i] == 1;
    if (pred && actual) ++tp;
    else if (pred) ++fp;
    else if (actual) ++fn;
  }
  if (tp == 0) return 0.0;
  return 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);
}

nlohmann::json report(const ScoredLabels& sl, double threshold) {
  check_shape(sl);
  const auto n_pos = std::count(sl.labels.begin(), sl.labels.end(), 1);
  return {{"auprc", auprc(sl)},
          {"auroc", auroc(sl)},
          {"f1_at_threshold", f1(sl, threshold)},
          {"threshold", threshold},
          {"n", sl.scores.size()},
          {"n_pos", n_pos}};
}

}  // namespace sqlsv::metrics

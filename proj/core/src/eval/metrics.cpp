#include "nervus/eval/metrics.hpp"

#include <algorithm>
#include <numeric>
#include <vector>

#include "nervus/error.hpp"

namespace nervus::metrics {

std::optional<double> roc_auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw ShapeError("roc_auc: scores and labels differ in length");
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Sum of mid-ranks of the positives (ties share the average rank).
  double positive_rank_sum = 0.0;
  std::size_t positives = 0;
  for (std::size_t start = 0; start < n;) {
    std::size_t stop = start;
    while (stop < n && scores[order[stop]] == scores[order[start]]) ++stop;
    const double mid_rank = 0.5 * static_cast<double>(start + 1 + stop);
    for (std::size_t k = start; k < stop; ++k) {
      if (labels[order[k]] == 1) {
        positive_rank_sum += mid_rank;
        ++positives;
      }
    }
    start = stop;
  }
  const std::size_t negatives = n - positives;
  if (positives == 0 || negatives == 0) return std::nullopt;
  const double p = static_cast<double>(positives);
  const double u = positive_rank_sum - p * (p + 1.0) / 2.0;
  return u / (p * static_cast<double>(negatives));
}

BinaryScores accuracy_and_auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size() || scores.empty()) {
    throw ShapeError("accuracy_and_auc: need equal, non-zero numbers of scores and labels");
  }
  std::size_t correct = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const int predicted = scores[i] > 0.5 ? 1 : 0;
    if (predicted == labels[i]) ++correct;
  }
  return {static_cast<double>(correct) / static_cast<double>(scores.size()), roc_auc(scores, labels)};
}

double argmax_accuracy(std::span<const double> probabilities, std::size_t classes,
                       std::span<const int> targets) {
  if (classes == 0 || probabilities.size() != classes * targets.size() || targets.empty()) {
    throw ShapeError("argmax_accuracy: probability block does not match targets");
  }
  std::size_t correct = 0;
  for (std::size_t r = 0; r < targets.size(); ++r) {
    const auto row = probabilities.subspan(r * classes, classes);
    const auto best = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
    if (best == targets[r]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(targets.size());
}

std::optional<double> macro_auc(std::span<const double> probabilities, std::size_t classes,
                                std::span<const int> targets) {
  if (classes == 0 || probabilities.size() != classes * targets.size()) {
    throw ShapeError("macro_auc: probability block does not match targets");
  }
  double total = 0.0;
  std::size_t counted = 0;
  std::vector<double> column(targets.size());
  std::vector<int> positive(targets.size());
  for (std::size_t c = 0; c < classes; ++c) {
    for (std::size_t r = 0; r < targets.size(); ++r) {
      column[r] = probabilities[r * classes + c];
      positive[r] = targets[r] == static_cast<int>(c) ? 1 : 0;
    }
    if (auto auc = roc_auc(column, positive)) {
      total += *auc;
      ++counted;
    }
  }
  if (counted == 0) return std::nullopt;
  return total / static_cast<double>(counted);
}

}  // namespace nervus::metrics

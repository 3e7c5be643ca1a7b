#pragma once

#include <optional>
#include <span>

namespace nervus::metrics {

struct BinaryScores {
  double accuracy = 0.0;      // threshold: score > 0.5 predicts the positive class
  std::optional<double> auc;  // absent unless both classes occur
};

/// `scores` are positive-class probabilities, `labels` are 0/1.
BinaryScores accuracy_and_auc(std::span<const double> scores, std::span<const int> labels);

/// Mann-Whitney AUC with tied scores counted 0.5; nullopt for single-class input.
std::optional<double> roc_auc(std::span<const double> scores, std::span<const int> labels);

/// Fraction of rows whose argmax (first maximum) equals the target.
/// `probabilities` is row-major [n, classes].
double argmax_accuracy(std::span<const double> probabilities, std::size_t classes,
                       std::span<const int> targets);

/// Macro average of one-vs-rest AUCs over the classes present with both
/// outcomes; nullopt when no class qualifies.
std::optional<double> macro_auc(std::span<const double> probabilities, std::size_t classes,
                                std::span<const int> targets);

}  // namespace nervus::metrics

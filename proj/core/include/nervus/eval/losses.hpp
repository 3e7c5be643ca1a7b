#pragma once

#include <span>
#include <string_view>

#include "nervus/grad/tape.hpp"
#include "nervus/grad/tensor.hpp"
#include "nervus/types.hpp"

namespace nervus::loss {

enum class Criterion { kCrossEntropy, kMse, kRmse, kMae, kNpll };

/// Tokens: CE, MSE, RMSE, MAE, NPLL.
std::string_view to_string(Criterion criterion);
Criterion parse_criterion(std::string_view token);

/// CE <-> classification, MSE/RMSE/MAE <-> regression, NPLL <-> deepsurv.
bool compatible(Criterion criterion, Task task);
Criterion default_criterion(Task task);

/// Mean over the batch of -log_softmax(logits)[target].
grad::Tensor cross_entropy(grad::Tape& tape, const grad::Tensor& logits,
                           std::span<const int> targets);

enum class RegressionKind { kMse, kRmse, kMae };

// MSE = mean squared error, RMSE = sqrt(MSE + 1e-12), MAE = mean absolute
// error (subgradient 0 at a zero residual). `pred` holds one value per sample.
grad::Tensor regression_loss(grad::Tape& tape, const grad::Tensor& pred,
                             std::span<const float> target, RegressionKind kind);

inline constexpr double kRmseEpsilon = 1e-12;

// Negative Cox partial log-likelihood averaged over events:
//   -(1/E) sum_{i: event} [ h_i - log sum_{j: period_j >= period_i} exp(h_j) ]
// Tied event times share one risk set (Breslow). Throws Error when the batch
// has no events.
grad::Tensor cox_npll(grad::Tape& tape, const grad::Tensor& risk, std::span<const int> events,
                      std::span<const double> periods);

/// Sum of per-label losses, accumulated left to right in single precision.
grad::Tensor total_loss(grad::Tape& tape, std::span<const grad::Tensor> losses);

}  // namespace nervus::loss

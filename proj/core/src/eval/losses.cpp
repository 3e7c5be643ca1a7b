#include "nervus/eval/losses.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "nervus/error.hpp"
#include "nervus/grad/ops.hpp"

namespace nervus::loss {
namespace {

grad::Tensor scalar_result(double value, const char* op) {
  const float v = static_cast<float>(value);
  std::vector<float> data{v};
  grad::check_finite(data, op);
  return grad::Tensor({1}, std::move(data));
}

double log_add_exp(double a, double b) {
  if (a == -INFINITY) return b;
  if (b == -INFINITY) return a;
  const double hi = std::max(a, b);
  return hi + std::log1p(std::exp(-std::abs(a - b)));
}

// Mean negative log-likelihood of the targeted entries of a log-probability block.
grad::Tensor nll_mean(grad::Tape& tape, const grad::Tensor& log_probs, std::span<const int> targets) {
  const std::size_t rows = log_probs.dim(0), cols = log_probs.dim(1);
  const auto lp = log_probs.data();
  double total = 0.0;
  for (std::size_t r = 0; r < rows; ++r) total -= lp[r * cols + static_cast<std::size_t>(targets[r])];
  grad::Tensor result = scalar_result(total / static_cast<double>(rows), "cross_entropy");
  if (tape.wants(std::vector<grad::Tensor>{log_probs})) {
    std::vector<int> picked(targets.begin(), targets.end());
    tape.record({log_probs}, result,
                [rows, cols, picked = std::move(picked)](const grad::Tensor& output,
                                                         std::span<grad::Tensor> inputs) {
                  grad::Tensor& in = inputs[0];
                  if (!in.requires_grad()) return;
                  const float g = output.grad()[0] / static_cast<float>(rows);
                  auto d = in.grad_buffer();
                  for (std::size_t r = 0; r < rows; ++r)
                    d[r * cols + static_cast<std::size_t>(picked[r])] -= g;
                });
  }
  return result;
}

}  // namespace

std::string_view to_string(Criterion criterion) {
  switch (criterion) {
    case Criterion::kCrossEntropy: return "CE";
    case Criterion::kMse: return "MSE";
    case Criterion::kRmse: return "RMSE";
    case Criterion::kMae: return "MAE";
    case Criterion::kNpll: return "NPLL";
  }
  return "?";
}

Criterion parse_criterion(std::string_view token) {
  if (token == "CE") return Criterion::kCrossEntropy;
  if (token == "MSE") return Criterion::kMse;
  if (token == "RMSE") return Criterion::kRmse;
  if (token == "MAE") return Criterion::kMae;
  if (token == "NPLL") return Criterion::kNpll;
  throw ConfigError("unknown criterion '" + std::string(token) + "'");
}

bool compatible(Criterion criterion, Task task) {
  switch (criterion) {
    case Criterion::kCrossEntropy: return task == Task::kClassification;
    case Criterion::kMse:
    case Criterion::kRmse:
    case Criterion::kMae: return task == Task::kRegression;
    case Criterion::kNpll: return task == Task::kDeepSurv;
  }
  return false;
}

Criterion default_criterion(Task task) {
  switch (task) {
    case Task::kClassification: return Criterion::kCrossEntropy;
    case Task::kRegression: return Criterion::kMse;
    case Task::kDeepSurv: return Criterion::kNpll;
  }
  return Criterion::kCrossEntropy;
}

grad::Tensor cross_entropy(grad::Tape& tape, const grad::Tensor& logits,
                           std::span<const int> targets) {
  if (logits.rank() != 2) throw ShapeError("cross_entropy: logits must be [batch, classes]");
  const std::size_t rows = logits.dim(0), cols = logits.dim(1);
  if (targets.size() != rows) {
    throw ShapeError("cross_entropy: " + std::to_string(targets.size()) + " targets for " +
                     std::to_string(rows) + " rows");
  }
  for (int t : targets) {
    if (t < 0 || static_cast<std::size_t>(t) >= cols) {
      throw Error("cross_entropy: target " + std::to_string(t) + " outside [0, " +
                  std::to_string(cols) + ")");
    }
  }
  return nll_mean(tape, grad::log_softmax(tape, logits), targets);
}

grad::Tensor regression_loss(grad::Tape& tape, const grad::Tensor& pred,
                             std::span<const float> target, RegressionKind kind) {
  const std::size_t n = pred.numel();
  if (target.size() != n || (pred.rank() == 2 && pred.dim(1) != 1)) {
    throw ShapeError("regression_loss: prediction " + grad::shape_string(pred.shape()) + " vs " +
                     std::to_string(target.size()) + " targets");
  }
  const auto p = pred.data();
  std::vector<double> residual(n);
  double squares = 0.0, absolute = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    residual[i] = static_cast<double>(p[i]) - static_cast<double>(target[i]);
    squares += residual[i] * residual[i];
    absolute += std::abs(residual[i]);
  }
  const double count = static_cast<double>(n);
  const double mse = squares / count;
  double value = 0.0;
  switch (kind) {
    case RegressionKind::kMse: value = mse; break;
    case RegressionKind::kRmse: value = std::sqrt(mse + kRmseEpsilon); break;
    case RegressionKind::kMae: value = absolute / count; break;
  }
  grad::Tensor result = scalar_result(value, "regression_loss");
  if (tape.wants(std::vector<grad::Tensor>{pred})) {
    tape.record({pred}, result,
                [kind, count, value, residual = std::move(residual)](
                    const grad::Tensor& output, std::span<grad::Tensor> inputs) {
                  grad::Tensor& in = inputs[0];
                  if (!in.requires_grad()) return;
                  const double g = output.grad()[0];
                  auto d = in.grad_buffer();
                  for (std::size_t i = 0; i < d.size(); ++i) {
                    double local = 0.0;
                    switch (kind) {
                      case RegressionKind::kMse: local = 2.0 * residual[i] / count; break;
                      case RegressionKind::kRmse: local = residual[i] / (count * value); break;
                      case RegressionKind::kMae:
                        local = residual[i] > 0.0 ? 1.0 / count : (residual[i] < 0.0 ? -1.0 / count : 0.0);
                        break;
                    }
                    d[i] += static_cast<float>(g * local);
                  }
                });
  }
  return result;
}

grad::Tensor cox_npll(grad::Tape& tape, const grad::Tensor& risk, std::span<const int> events,
                      std::span<const double> periods) {
  const std::size_t n = risk.numel();
  if (events.size() != n || periods.size() != n) {
    throw ShapeError("cox_npll: risk, event and period lengths differ");
  }
  if (risk.rank() == 2 && risk.dim(1) != 1) throw ShapeError("cox_npll: risk must be [batch, 1]");
  std::size_t event_count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (events[i] != 0 && events[i] != 1) throw Error("cox_npll: event indicators must be 0 or 1");
    if (!(periods[i] > 0.0)) throw Error("cox_npll: periods must be positive");
    event_count += static_cast<std::size_t>(events[i]);
  }
  if (event_count == 0) throw Error("cox_npll: batch contains no events");

  const auto h = risk.data();
  // Descending period; the running log-sum-exp over a prefix is the risk set of
  // every subject whose period closes that prefix (ties included as a block).
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return periods[a] > periods[b]; });

  std::vector<double> risk_set_lse(n);  // per subject: log sum_{j in R(t_i)} exp(h_j)
  double running = -INFINITY;
  for (std::size_t start = 0; start < n;) {
    std::size_t stop = start;
    while (stop < n && periods[order[stop]] == periods[order[start]]) {
      running = log_add_exp(running, h[order[stop]]);
      ++stop;
    }
    for (std::size_t k = start; k < stop; ++k) risk_set_lse[order[k]] = running;
    start = stop;
  }

  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    if (events[i]) total += static_cast<double>(h[i]) - risk_set_lse[i];
  const double events_d = static_cast<double>(event_count);
  grad::Tensor result = scalar_result(-total / events_d, "cox_npll");

  if (tape.wants(std::vector<grad::Tensor>{risk})) {
    std::vector<int> ev(events.begin(), events.end());
    std::vector<double> per(periods.begin(), periods.end());
    tape.record({risk}, result,
                [order, risk_set_lse, ev = std::move(ev), per = std::move(per), events_d](
                    const grad::Tensor& output, std::span<grad::Tensor> inputs) {
                  grad::Tensor& in = inputs[0];
                  if (!in.requires_grad()) return;
                  const double g = output.grad()[0];
                  const auto hv = in.data();
                  const std::size_t count = order.size();
                  // log sum over events i with period_i <= period_k of exp(-lse_i),
                  // swept in ascending period order.
                  std::vector<double> log_inverse(count);
                  double acc = -INFINITY;
                  for (std::size_t end = count; end > 0;) {
                    std::size_t begin = end;
                    while (begin > 0 && per[order[begin - 1]] == per[order[end - 1]]) {
                      --begin;
                      const std::size_t i = order[begin];
                      if (ev[i]) acc = log_add_exp(acc, -risk_set_lse[i]);
                    }
                    for (std::size_t k = begin; k < end; ++k) log_inverse[order[k]] = acc;
                    end = begin;
                  }
                  auto d = in.grad_buffer();
                  for (std::size_t k = 0; k < count; ++k) {
                    const double share =
                        log_inverse[k] == -INFINITY ? 0.0 : std::exp(hv[k] + log_inverse[k]);
                    d[k] += static_cast<float>(g * (share - ev[k]) / events_d);
                  }
                });
  }
  return result;
}

grad::Tensor total_loss(grad::Tape& tape, std::span<const grad::Tensor> losses) {
  if (losses.empty()) throw Error("total_loss: no per-label losses");
  float total = 0.0f;
  for (const grad::Tensor& l : losses) total += l.item();
  grad::Tensor result = scalar_result(total, "total_loss");
  if (tape.wants(losses)) {
    tape.record(std::vector<grad::Tensor>(losses.begin(), losses.end()), result,
                [](const grad::Tensor& output, std::span<grad::Tensor> inputs) {
                  const float g = output.grad()[0];
                  for (grad::Tensor& in : inputs)
                    if (in.requires_grad()) in.grad_buffer()[0] += g;
                });
  }
  return result;
}

}  // namespace nervus::loss

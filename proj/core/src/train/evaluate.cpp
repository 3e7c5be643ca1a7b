#include "nervus/train/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "nervus/error.hpp"
#include "nervus/eval/metrics.hpp"
#include "nervus/grad/tape.hpp"

namespace nervus::train {
namespace {

std::vector<int> as_ints(const std::vector<float>& values) {
  std::vector<int> out(values.size());
  std::transform(values.begin(), values.end(), out.begin(),
                 [](float v) { return static_cast<int>(v); });
  return out;
}

bool has_event(const data::Batch& batch, std::size_t label) {
  const auto& events = batch.targets[label];
  return std::any_of(events.begin(), events.end(), [](float e) { return e == 1.0f; });
}

std::vector<double> softmax_rows(const std::vector<PredictionRow>& rows, std::size_t label,
                                 std::size_t classes) {
  std::vector<double> probabilities;
  probabilities.reserve(rows.size() * classes);
  for (const PredictionRow& row : rows) {
    const auto& logits = row.outputs[label];
    const double top = *std::max_element(logits.begin(), logits.end());
    double total = 0.0;
    for (float z : logits) total += std::exp(static_cast<double>(z) - top);
    for (float z : logits) probabilities.push_back(std::exp(static_cast<double>(z) - top) / total);
  }
  return probabilities;
}

void classification_metrics(EvalReport& report, const LabelSpec& spec, std::size_t label) {
  const auto classes = static_cast<std::size_t>(spec.class_count);
  const std::vector<double> probabilities = softmax_rows(report.rows, label, classes);
  std::vector<int> targets;
  for (const PredictionRow& row : report.rows) targets.push_back(static_cast<int>(row.truths[label]));

  if (classes == 2) {
    std::vector<double> positive;
    for (std::size_t r = 0; r < report.rows.size(); ++r) positive.push_back(probabilities[2 * r + 1]);
    const metrics::BinaryScores scores = metrics::accuracy_and_auc(positive, targets);
    report.metrics.push_back({spec.name, "accuracy", scores.accuracy});
    if (scores.auc) report.metrics.push_back({spec.name, "auc", *scores.auc});
    return;
  }
  report.metrics.push_back({spec.name, "accuracy", metrics::argmax_accuracy(probabilities, classes, targets)});
  if (auto auc = metrics::macro_auc(probabilities, classes, targets)) {
    report.metrics.push_back({spec.name, "auc", *auc});
  }
}

void regression_metrics(EvalReport& report, const LabelSpec& spec, std::size_t label) {
  double squared = 0.0, absolute = 0.0;
  for (const PredictionRow& row : report.rows) {
    const double residual = static_cast<double>(row.outputs[label][0]) - row.truths[label];
    squared += residual * residual;
    absolute += std::abs(residual);
  }
  const auto n = static_cast<double>(report.rows.size());
  report.metrics.push_back({spec.name, "mse", squared / n});
  report.metrics.push_back({spec.name, "rmse", std::sqrt(squared / n)});
  report.metrics.push_back({spec.name, "mae", absolute / n});
}

void survival_metrics(EvalReport& report, const LabelSpec& spec, std::size_t label) {
  std::vector<metrics::SurvivalRecord> records;
  for (const PredictionRow& row : report.rows) {
    records.push_back({row.outputs[label][0], static_cast<int>(row.truths[label]), row.period.value_or(0.0)});
  }
  const bool any_event =
      std::any_of(records.begin(), records.end(), [](const auto& r) { return r.event == 1; });
  if (any_event) {
    try {
      report.metrics.push_back({spec.name, "c_index", metrics::c_index(records)});
    } catch (const Error&) {
      // no comparable pair: c-index undefined on this split
    }
  }
  SurvivalGroups groups = split_at_median(records);
  if (any_event && groups.low_size > 0 && groups.high_size > 0) {
    std::vector<metrics::SurvivalRecord> low, high;
    for (const auto& r : records) (r.risk > groups.median_risk ? high : low).push_back(r);
    const metrics::LogRankResult test = metrics::log_rank(low, high);
    report.metrics.push_back({spec.name, "logrank_chi2", test.statistic});
    report.metrics.push_back({spec.name, "logrank_p", test.p_value});
  }
  report.survival = std::move(groups);
}

}  // namespace

std::optional<double> EvalReport::metric(std::string_view label, std::string_view name) const {
  for (const MetricRow& row : metrics) {
    if (row.label == label && row.metric == name) return row.value;
  }
  return std::nullopt;
}

grad::Tensor label_loss(grad::Tape& tape, const grad::Tensor& output, const data::Batch& batch,
                        std::size_t label, loss::Criterion criterion) {
  const std::vector<float>& targets = batch.targets.at(label);
  switch (criterion) {
    case loss::Criterion::kCrossEntropy:
      return loss::cross_entropy(tape, output, as_ints(targets));
    case loss::Criterion::kMse:
      return loss::regression_loss(tape, output, targets, loss::RegressionKind::kMse);
    case loss::Criterion::kRmse:
      return loss::regression_loss(tape, output, targets, loss::RegressionKind::kRmse);
    case loss::Criterion::kMae:
      return loss::regression_loss(tape, output, targets, loss::RegressionKind::kMae);
    case loss::Criterion::kNpll:
      return loss::cox_npll(tape, output, as_ints(targets), batch.periods);
  }
  throw ConfigError("unknown criterion");
}

SurvivalGroups split_at_median(std::span<const metrics::SurvivalRecord> records) {
  SurvivalGroups groups;
  if (records.empty()) return groups;
  std::vector<double> risks;
  for (const auto& r : records) risks.push_back(r.risk);
  std::sort(risks.begin(), risks.end());
  const std::size_t n = risks.size();
  groups.median_risk = n % 2 == 1 ? risks[n / 2] : 0.5 * (risks[n / 2 - 1] + risks[n / 2]);

  std::vector<metrics::SurvivalRecord> low, high;
  for (const auto& r : records) (r.risk > groups.median_risk ? high : low).push_back(r);
  groups.low_size = low.size();
  groups.high_size = high.size();
  groups.low = metrics::kaplan_meier(low);
  groups.high = metrics::kaplan_meier(high);
  return groups;
}

EvalReport evaluate(const model::ModelAssembly& model, const EvalInputs& inputs, Split split) {
  const data::Manifest& manifest = *inputs.manifest;
  const model::ModelSpec& spec = model.spec();
  const std::vector<std::size_t> indices = manifest.indices(split);
  if (indices.empty()) {
    throw ManifestError("the " + std::string(to_string(split)) + " split is empty");
  }

  data::BatchOptions options;
  options.batch_size = inputs.batch_size;
  options.use_images = spec.modality != model::Modality::kTabular;
  options.use_tabular = spec.modality != model::Modality::kImage;

  EvalReport report;
  report.split = split;
  const std::size_t labels = spec.labels.size();
  std::vector<double> loss_sum(labels, 0.0), loss_weight(labels, 0.0);
  grad::Tape tape(grad::Tape::Recording::kOff);
  Rng unused_rng(0);

  for (std::size_t start = 0; start < indices.size(); start += inputs.batch_size) {
    const std::size_t stop = std::min(indices.size(), start + inputs.batch_size);
    const std::span<const std::size_t> chunk(indices.data() + start, stop - start);
    const data::Batch batch =
        data::assemble_batch(manifest, chunk, *inputs.stats, inputs.images, options);
    const std::vector<grad::Tensor> outputs =
        model.forward(tape, batch.images, batch.tabular, Mode::kEval, unused_rng);

    for (std::size_t l = 0; l < labels; ++l) {
      if (spec.task == Task::kDeepSurv && !has_event(batch, l)) continue;
      const float value = label_loss(tape, outputs[l], batch, l, inputs.criterion).item();
      loss_sum[l] += static_cast<double>(value) * static_cast<double>(batch.size());
      loss_weight[l] += static_cast<double>(batch.size());
    }
    for (std::size_t s = 0; s < batch.size(); ++s) {
      const data::SampleRecord& record = manifest.records[batch.records[s]];
      PredictionRow row{record.id, record.split, {}, record.labels, record.period};
      row.outputs.resize(labels);
      for (std::size_t l = 0; l < labels; ++l) {
        const std::size_t width = spec.labels[l].output_width();
        const auto values = outputs[l].data().subspan(s * width, width);
        row.outputs[l].assign(values.begin(), values.end());
      }
      report.rows.push_back(std::move(row));
    }
    tape.clear();
  }

  report.losses.per_label.resize(labels);
  for (std::size_t l = 0; l < labels; ++l) {
    report.losses.per_label[l] = loss_weight[l] > 0.0
                                     ? static_cast<float>(loss_sum[l] / loss_weight[l])
                                     : std::numeric_limits<float>::quiet_NaN();
    report.losses.total += report.losses.per_label[l];
  }

  for (std::size_t l = 0; l < labels; ++l) {
    const LabelSpec& label = spec.labels[l];
    if (std::isfinite(report.losses.per_label[l])) {
      report.metrics.push_back({label.name, "loss", report.losses.per_label[l]});
    }
    switch (label.kind) {
      case LabelKind::kClassification: classification_metrics(report, label, l); break;
      case LabelKind::kRegression: regression_metrics(report, label, l); break;
      case LabelKind::kSurvival: survival_metrics(report, label, l); break;
    }
  }
  return report;
}

}  // namespace nervus::train

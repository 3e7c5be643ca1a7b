#pragma once

#include <optional>
#include <string>
#include <vector>

#include "nervus/data/batch.hpp"
#include "nervus/data/manifest.hpp"
#include "nervus/data/tabular.hpp"
#include "nervus/eval/losses.hpp"
#include "nervus/eval/survival.hpp"
#include "nervus/model/assembly.hpp"

namespace nervus::train {

struct PredictionRow {
  std::string id;
  Split split = Split::kTrain;
  std::vector<std::vector<float>> outputs;  // per label: class logits, a value or a risk
  std::vector<float> truths;                // per label
  std::optional<double> period;
};

struct MetricRow {
  std::string label;
  std::string metric;
  double value = 0.0;
};

struct SplitLosses {
  std::vector<float> per_label;
  float total = 0.0f;  // single-precision sum of per_label in label order
};

struct SurvivalGroups {
  std::size_t low_size = 0;
  std::size_t high_size = 0;
  double median_risk = 0.0;
  metrics::KmCurve low;
  metrics::KmCurve high;
};

struct EvalReport {
  Split split = Split::kVal;
  SplitLosses losses;
  std::vector<PredictionRow> rows;
  std::vector<MetricRow> metrics;
  std::optional<SurvivalGroups> survival;

  /// Value of `metric` for `label`, when reported.
  std::optional<double> metric(std::string_view label, std::string_view metric) const;
};

struct EvalInputs {
  const data::Manifest* manifest = nullptr;
  const data::TabularStats* stats = nullptr;
  const data::ImageSource* images = nullptr;
  loss::Criterion criterion = loss::Criterion::kCrossEntropy;
  std::size_t batch_size = 32;
};

// Runs the split in manifest order with dropout off and no augmentation.
// Losses are batch-size weighted means of batch losses; deepsurv batches
// without events are left out of the loss. Throws ManifestError on an empty
// split. Parameters are never modified.
EvalReport evaluate(const model::ModelAssembly& model, const EvalInputs& inputs, Split split);

/// Loss of one label's head output on a batch.
grad::Tensor label_loss(grad::Tape& tape, const grad::Tensor& output, const data::Batch& batch,
                        std::size_t label, loss::Criterion criterion);

/// Median-risk split: high when risk > median, ties to the low group.
SurvivalGroups split_at_median(std::span<const metrics::SurvivalRecord> records);

}  // namespace nervus::train

#pragma once

#include <vector>

#include "nervus/data/manifest.hpp"

namespace nervus::data {

/// Per-feature z-score parameters fitted on the train split only.
struct TabularStats {
  static constexpr double kMinStddev = 1e-8;

  std::vector<double> mean;
  std::vector<double> stddev;  // population sigma, floored at kMinStddev

  std::size_t width() const { return mean.size(); }
  bool operator==(const TabularStats&) const = default;
};

/// Throws ManifestError when the train split is empty.
TabularStats fit_tabular_stats(const Manifest& manifest);

/// (x - mean) / sigma in declared feature order. Throws ShapeError when the
/// record's feature count differs from the stats.
std::vector<float> normalize_tabular(const TabularStats& stats, const SampleRecord& record);

}  // namespace nervus::data

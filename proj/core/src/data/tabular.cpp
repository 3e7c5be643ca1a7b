#include "nervus/data/tabular.hpp"

#include <algorithm>
#include <cmath>

#include "nervus/error.hpp"

namespace nervus::data {

TabularStats fit_tabular_stats(const Manifest& manifest) {
  const std::vector<std::size_t> train = manifest.indices(Split::kTrain);
  if (train.empty()) throw ManifestError("cannot fit tabular statistics: no train records");
  const std::size_t width = manifest.feature_names.size();
  TabularStats stats;
  stats.mean.assign(width, 0.0);
  stats.stddev.assign(width, 0.0);
  const double n = static_cast<double>(train.size());
  for (std::size_t f = 0; f < width; ++f) {
    double total = 0.0;
    for (std::size_t i : train) total += manifest.records[i].tabular[f];
    const double mean = total / n;
    double squares = 0.0;
    for (std::size_t i : train) {
      const double d = manifest.records[i].tabular[f] - mean;
      squares += d * d;
    }
    stats.mean[f] = mean;
    stats.stddev[f] = std::max(std::sqrt(squares / n), TabularStats::kMinStddev);
  }
  return stats;
}

std::vector<float> normalize_tabular(const TabularStats& stats, const SampleRecord& record) {
  if (record.tabular.size() != stats.width()) {
    throw ShapeError("record '" + record.id + "' has " + std::to_string(record.tabular.size()) +
                     " tabular features, normalizer expects " + std::to_string(stats.width()));
  }
  std::vector<float> out(stats.width());
  for (std::size_t f = 0; f < out.size(); ++f) {
    out[f] = static_cast<float>((record.tabular[f] - stats.mean[f]) / stats.stddev[f]);
  }
  return out;
}

}  // namespace nervus::data

#pragma once

#include <filesystem>
#include <vector>

#include "nervus/data/manifest.hpp"
#include "nervus/train/evaluate.hpp"

namespace nervus::train {

struct EpochLog {
  int epoch = 0;
  float train_loss = 0.0f;
  float val_loss = 0.0f;
  std::vector<float> val_label_losses;
  double seconds = 0.0;
  bool saved = false;
};

void write_log_csv(const std::filesystem::path& path, const data::Manifest& manifest,
                   const std::vector<EpochLog>& epochs);
void write_likelihood_csv(const std::filesystem::path& path, const data::Manifest& manifest,
                          const EvalReport& report);
void write_metrics_csv(const std::filesystem::path& path, const EvalReport& report);
/// Only for reports carrying survival groups.
void write_km_csv(const std::filesystem::path& path, const EvalReport& report);

/// likelihood.csv, metrics.csv and, for deepsurv, km.csv under `dir`.
void write_report_files(const std::filesystem::path& dir, const data::Manifest& manifest,
                        const EvalReport& report);

}  // namespace nervus::train

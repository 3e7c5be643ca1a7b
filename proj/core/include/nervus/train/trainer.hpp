#pragma once

#include <filesystem>
#include <iosfwd>
#include <vector>

#include "nervus/data/manifest.hpp"
#include "nervus/model/spec.hpp"
#include "nervus/train/config.hpp"
#include "nervus/train/evaluate.hpp"
#include "nervus/train/report.hpp"

namespace nervus::train {

struct TrainResult {
  std::vector<EpochLog> epochs;
  std::vector<std::filesystem::path> checkpoints;  // files written, in order
  EvalReport final_report;                          // last epoch, val split
};

/// Model description implied by the config and the manifest's labels and
/// features. Throws ConfigError when the model choice needs a modality the
/// manifest lacks.
model::ModelSpec derive_spec(const TrainConfig& config, const data::Manifest& manifest);

// One run: every epoch trains over the sampler's draw, evaluates the val split
// and applies the save policy. Writes log.csv after each epoch and the final
// val-split report files. A non-finite loss throws NumericError naming the
// epoch and batch.
TrainResult train(const TrainConfig& config, const data::Manifest& manifest,
                  std::ostream* progress = nullptr);
TrainResult train(const TrainConfig& config, std::ostream* progress = nullptr);

/// Loads `config.weights`, evaluates the test split and writes the report
/// files. A missing weights file throws IoError before the manifest is read.
EvalReport test_command(const TrainConfig& config);

}  // namespace nervus::train

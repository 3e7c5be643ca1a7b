#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "nervus/data/augment.hpp"
#include "nervus/data/sampler.hpp"
#include "nervus/eval/losses.hpp"
#include "nervus/grad/optimizer.hpp"
#include "nervus/model/spec.hpp"
#include "nervus/types.hpp"

namespace nervus::train {

// improvement: keep epoch<k>.nvs for every epoch that lowers the running
// minimum of the validation loss. best: overwrite best.nvs under the same rule.
enum class SavePolicy { kImprovement, kBest };

std::string_view to_string(SavePolicy policy);
SavePolicy parse_save_policy(std::string_view token);

enum class LogTiming { kWall, kNone };

struct TrainConfig {
  std::filesystem::path manifest;
  std::filesystem::path image_root;  // empty: relative to the manifest's directory
  Task task = Task::kClassification;
  model::Modality modality = model::Modality::kTabular;
  std::optional<loss::Criterion> criterion;  // defaults from the task
  grad::OptimizerKind optimizer = grad::OptimizerKind::kAdam;
  float learning_rate = 1e-3f;
  float momentum = 0.0f;
  int epochs = 50;
  std::size_t batch_size = 32;
  data::Augmentation augmentation = data::Augmentation::kNone;
  data::SamplerMode sampler = data::SamplerMode::kShuffled;
  std::string anchor_label;
  int in_channels = 1;
  std::optional<int> bit_depth;
  std::vector<std::size_t> mlp_hidden{256, 256};
  float dropout = 0.2f;
  int cnn_depth = 3;
  int cnn_channels = 16;
  std::optional<std::filesystem::path> pretrained_weights;
  std::optional<std::filesystem::path> weights;  // test only
  SavePolicy save_policy = SavePolicy::kBest;
  std::string device = "cpu";
  std::uint64_t seed = 0;
  std::filesystem::path out = ".";
  LogTiming log_timing = LogTiming::kWall;

  loss::Criterion resolved_criterion() const;
  /// Checks everything that does not need the manifest; throws ConfigError.
  void validate() const;
};

/// True when `val_loss` is a strict improvement over `best_so_far`.
bool should_save(SavePolicy policy, double val_loss, double best_so_far);

}  // namespace nervus::train

#pragma once

#include <cstddef>
#include <optional>
#include <string_view>
#include <vector>

#include "nervus/types.hpp"

namespace nervus::model {

enum class Modality { kTabular, kImage, kBoth };

std::string_view to_string(Modality modality);
Modality parse_modality(std::string_view token);

struct MlpSpec {
  std::size_t input_width = 0;
  std::vector<std::size_t> hidden{256, 256};
  float dropout = 0.2f;

  std::size_t output_width() const { return hidden.empty() ? input_width : hidden.back(); }
  bool operator==(const MlpSpec&) const = default;
};

// Built-in image extractor: `depth` blocks of conv3x3(pad 1) -> relu -> maxpool2x2,
// channels doubling from `base_channels`, then global average pooling.
struct CnnSpec {
  int in_channels = 1;
  int depth = 3;
  int base_channels = 16;

  std::size_t feature_width() const {
    return static_cast<std::size_t>(base_channels) << (depth - 1);
  }
  /// Smallest spatial extent the network accepts.
  std::size_t min_extent() const { return std::size_t{1} << depth; }
  bool operator==(const CnnSpec&) const = default;
};

struct ModelSpec {
  Task task = Task::kClassification;
  std::vector<LabelSpec> labels;
  Modality modality = Modality::kTabular;
  std::optional<MlpSpec> mlp;
  std::optional<CnnSpec> cnn;

  /// Width of the block the heads consume.
  std::size_t mixed_width() const;
  /// Throws ConfigError describing the first inconsistency.
  void validate() const;
  bool operator==(const ModelSpec&) const = default;
};

/// Closed-form parameter count of the assembly described by `spec`.
std::size_t parameter_count(const ModelSpec& spec);

}  // namespace nervus::model

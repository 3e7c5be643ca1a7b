#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "nervus/types.hpp"

namespace nervus::data {

/// One manifest row. Tabular values and labels are stored in the manifest's
/// declared feature / label order.
struct SampleRecord {
  std::string id;
  Split split = Split::kTrain;
  std::optional<std::string> image_ref;
  std::vector<float> tabular;
  std::vector<float> labels;
  std::optional<double> period;
};

struct Manifest {
  Task task = Task::kClassification;
  std::vector<LabelSpec> labels;
  std::vector<std::string> feature_names;
  bool has_images = false;
  std::vector<SampleRecord> records;

  std::vector<std::size_t> indices(Split split) const;
  std::size_t count(Split split) const;
  /// Position of a label by name (without the `label_` prefix); throws ConfigError.
  std::size_t label_index(std::string_view name) const;
};

// Column layout:
//   id, split                     required
//   imgpath                       optional image path relative to an image root
//   input_<name>                  tabular features (decimal)
//   label_<name>                  one or more labels
//   period                        required iff task == deepsurv
// Throws ManifestError describing the first violation.
Manifest parse_manifest(std::string_view csv_text, Task task);

Manifest load_manifest(const std::filesystem::path& path, Task task);

}  // namespace nervus::data

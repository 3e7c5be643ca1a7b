#pragma once

#include <cstddef>
#include <string>
#include <string_view>

namespace nervus {

enum class Task { kClassification, kRegression, kDeepSurv };

enum class Split { kTrain, kVal, kTest };

enum class LabelKind { kClassification, kRegression, kSurvival };

/// Train mode enables dropout and augmentation; eval mode is deterministic.
enum class Mode { kTrain, kEval };

/// One declared output of the model.
struct LabelSpec {
  std::string name;
  LabelKind kind = LabelKind::kClassification;
  int class_count = 2;  // >= 2 for classification, 1 otherwise

  /// Width of the head emitting this label.
  std::size_t output_width() const {
    return kind == LabelKind::kClassification ? static_cast<std::size_t>(class_count) : 1;
  }

  bool operator==(const LabelSpec&) const = default;
};

std::string_view to_string(Task task);
std::string_view to_string(Split split);
std::string_view to_string(LabelKind kind);

/// Parse helpers throw ConfigError on unknown tokens.
Task parse_task(std::string_view token);
Split parse_split(std::string_view token);
LabelKind parse_label_kind(std::string_view token);

/// Label kind implied by a task.
LabelKind label_kind_for(Task task);

}  // namespace nervus

#include "nervus/types.hpp"

#include <string>

#include "nervus/error.hpp"

namespace nervus {

std::string_view to_string(Task task) {
  switch (task) {
    case Task::kClassification: return "classification";
    case Task::kRegression: return "regression";
    case Task::kDeepSurv: return "deepsurv";
  }
  return "?";
}

std::string_view to_string(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
  }
  return "?";
}

std::string_view to_string(LabelKind kind) {
  switch (kind) {
    case LabelKind::kClassification: return "classification";
    case LabelKind::kRegression: return "regression";
    case LabelKind::kSurvival: return "survival";
  }
  return "?";
}

Task parse_task(std::string_view token) {
  if (token == "classification") return Task::kClassification;
  if (token == "regression") return Task::kRegression;
  if (token == "deepsurv") return Task::kDeepSurv;
  throw ConfigError("unknown task '" + std::string(token) + "'");
}

Split parse_split(std::string_view token) {
  if (token == "train") return Split::kTrain;
  if (token == "val") return Split::kVal;
  if (token == "test") return Split::kTest;
  throw ConfigError("unknown split '" + std::string(token) + "'");
}

LabelKind parse_label_kind(std::string_view token) {
  if (token == "classification") return LabelKind::kClassification;
  if (token == "regression") return LabelKind::kRegression;
  if (token == "survival") return LabelKind::kSurvival;
  throw ConfigError("unknown label kind '" + std::string(token) + "'");
}

LabelKind label_kind_for(Task task) {
  switch (task) {
    case Task::kClassification: return LabelKind::kClassification;
    case Task::kRegression: return LabelKind::kRegression;
    case Task::kDeepSurv: return LabelKind::kSurvival;
  }
  return LabelKind::kClassification;
}

}  // namespace nervus

#include "nervus/model/spec.hpp"

#include <string>

#include "nervus/error.hpp"

namespace nervus::model {

std::string_view to_string(Modality modality) {
  switch (modality) {
    case Modality::kTabular: return "MLP";
    case Modality::kImage: return "CNN";
    case Modality::kBoth: return "MLP+CNN";
  }
  return "?";
}

Modality parse_modality(std::string_view token) {
  if (token == "MLP") return Modality::kTabular;
  if (token == "CNN") return Modality::kImage;
  if (token == "MLP+CNN") return Modality::kBoth;
  throw ConfigError("unknown modality '" + std::string(token) + "'");
}

std::size_t ModelSpec::mixed_width() const {
  std::size_t width = 0;
  if (cnn && modality != Modality::kTabular) width += cnn->feature_width();
  if (mlp && modality != Modality::kImage) width += mlp->output_width();
  return width;
}

void ModelSpec::validate() const {
  const bool needs_mlp = modality != Modality::kImage;
  const bool needs_cnn = modality != Modality::kTabular;
  if (needs_mlp && !mlp) throw ConfigError("tabular modality requires an MLP spec");
  if (needs_cnn && !cnn) throw ConfigError("image modality requires a CNN spec");
  if (!needs_mlp && mlp) throw ConfigError("MLP spec given for an image-only model");
  if (!needs_cnn && cnn) throw ConfigError("CNN spec given for a tabular-only model");
  if (mlp) {
    if (mlp->input_width == 0) throw ConfigError("MLP needs at least one tabular feature");
    for (std::size_t h : mlp->hidden)
      if (h == 0) throw ConfigError("MLP hidden widths must be positive");
    if (!(mlp->dropout >= 0.0f && mlp->dropout < 1.0f)) {
      throw ConfigError("MLP dropout must lie in [0, 1)");
    }
  }
  if (cnn) {
    if (cnn->in_channels != 1 && cnn->in_channels != 3) {
      throw ConfigError("CNN input channels must be 1 or 3");
    }
    if (cnn->depth < 1 || cnn->depth > 8) throw ConfigError("CNN depth must lie in [1, 8]");
    if (cnn->base_channels < 1) throw ConfigError("CNN base channels must be positive");
  }
  if (labels.empty()) throw ConfigError("model needs at least one label");
  const LabelKind expected = label_kind_for(task);
  for (const LabelSpec& label : labels) {
    if (label.kind != expected) {
      throw ConfigError("label '" + label.name + "' has kind " + std::string(to_string(label.kind)) +
                        " but task is " + std::string(to_string(task)));
    }
    if (label.kind == LabelKind::kClassification && label.class_count < 2) {
      throw ConfigError("classification label '" + label.name + "' needs at least 2 classes");
    }
    if (label.kind != LabelKind::kClassification && label.class_count != 1) {
      throw ConfigError("label '" + label.name + "' must have a single output");
    }
  }
  if (task == Task::kDeepSurv && labels.size() != 1) {
    throw ConfigError("deepsurv takes exactly one (binary event) label");
  }
}

std::size_t parameter_count(const ModelSpec& spec) {
  std::size_t total = 0;
  if (spec.mlp && spec.modality != Modality::kImage) {
    std::size_t in = spec.mlp->input_width;
    for (std::size_t h : spec.mlp->hidden) {
      total += in * h + h;
      in = h;
    }
  }
  if (spec.cnn && spec.modality != Modality::kTabular) {
    std::size_t in = static_cast<std::size_t>(spec.cnn->in_channels);
    std::size_t out = static_cast<std::size_t>(spec.cnn->base_channels);
    for (int d = 0; d < spec.cnn->depth; ++d) {
      total += out * in * 9 + out;
      in = out;
      out *= 2;
    }
  }
  const std::size_t width = spec.mixed_width();
  for (const LabelSpec& label : spec.labels) total += width * label.output_width() + label.output_width();
  return total;
}

}  // namespace nervus::model

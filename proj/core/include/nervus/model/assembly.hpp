#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include "nervus/grad/ops.hpp"
#include "nervus/model/layers.hpp"
#include "nervus/model/spec.hpp"
#include "nervus/random.hpp"

namespace nervus::model {

// Extractor(s) -> mixer -> one fully connected head per label.
//
// Parameter tensors are owned by the assembly and shared by handle with the
// registry, so optimizers and checkpoints see the live values. Assemblies are
// move-only; use clone() for an independent copy.
class ModelAssembly {
 public:
  /// Instantiates and He-initializes every layer; throws ConfigError on an
  /// invalid spec.
  static ModelAssembly build(const ModelSpec& spec, Rng& init_rng);

  ModelAssembly(ModelAssembly&&) = default;
  ModelAssembly& operator=(ModelAssembly&&) = default;
  ModelAssembly(const ModelAssembly&) = delete;
  ModelAssembly& operator=(const ModelAssembly&) = delete;

  ModelAssembly clone() const;

  const ModelSpec& spec() const { return spec_; }

  /// Mixed feature block for a batch. `images` / `tabular` must be present
  /// exactly when the modality uses them.
  grad::Tensor features(grad::Tape& tape, const std::optional<grad::Tensor>& images,
                        const std::optional<grad::Tensor>& tabular, Mode mode,
                        Rng& dropout_rng) const;

  /// Per-label outputs in label order: logits [batch, classes] for
  /// classification, [batch, 1] values or risk scores otherwise.
  std::vector<grad::Tensor> heads_forward(grad::Tape& tape, const grad::Tensor& mixed) const;

  std::vector<grad::Tensor> forward(grad::Tape& tape, const std::optional<grad::Tensor>& images,
                                    const std::optional<grad::Tensor>& tabular, Mode mode,
                                    Rng& dropout_rng) const;

  const std::vector<NamedTensor>& parameters() const { return registry_; }
  std::vector<grad::Tensor> parameter_tensors() const;
  /// Throws ConfigError when no parameter carries `name`.
  grad::Tensor parameter(std::string_view name) const;
  std::size_t parameter_count() const;

  const std::optional<MlpExtractor>& mlp() const { return mlp_; }
  const std::optional<CnnExtractor>& cnn() const { return cnn_; }
  const std::vector<Linear>& heads() const { return heads_; }

 private:
  ModelAssembly() = default;
  void rebuild_registry();

  ModelSpec spec_;
  std::optional<MlpExtractor> mlp_;
  std::optional<CnnExtractor> cnn_;
  std::vector<Linear> heads_;
  std::vector<NamedTensor> registry_;
};

/// Convenience wrapper over ModelAssembly::build.
ModelAssembly build_model(Task task, std::vector<LabelSpec> labels, Modality modality,
                          std::optional<MlpSpec> mlp, std::optional<CnnSpec> cnn, Rng& init_rng);

/// Concatenates image then tabular features. With a single modality the
/// present block is returned unchanged.
grad::Tensor mix_features(grad::Tape& tape, const std::optional<grad::Tensor>& image_features,
                          const std::optional<grad::Tensor>& tabular_features);

/// Sums a [C_out, 3, k, k] kernel over its input channels -> [C_out, 1, k, k].
/// A grayscale image then responds exactly as its 3-channel replication did.
grad::Tensor adapt_first_layer(const grad::Tensor& weight);

}  // namespace nervus::model

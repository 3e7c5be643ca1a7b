#include "nervus/model/assembly.hpp"

#include "nervus/error.hpp"

namespace nervus::model {

ModelAssembly ModelAssembly::build(const ModelSpec& spec, Rng& init_rng) {
  spec.validate();
  ModelAssembly model;
  model.spec_ = spec;
  if (spec.modality != Modality::kTabular) model.cnn_.emplace(*spec.cnn, init_rng);
  if (spec.modality != Modality::kImage) model.mlp_.emplace(*spec.mlp, init_rng);
  const std::size_t width = spec.mixed_width();
  for (const LabelSpec& label : spec.labels) {
    model.heads_.push_back(Linear::init(width, label.output_width(), init_rng));
  }
  model.rebuild_registry();
  return model;
}

ModelAssembly ModelAssembly::clone() const {
  ModelAssembly copy;
  copy.spec_ = spec_;
  if (mlp_) copy.mlp_ = mlp_->deep_copy();
  if (cnn_) copy.cnn_ = cnn_->deep_copy();
  for (const Linear& head : heads_) copy.heads_.push_back(head.deep_copy());
  copy.rebuild_registry();
  return copy;
}

void ModelAssembly::rebuild_registry() {
  registry_.clear();
  if (cnn_) cnn_->collect(registry_);
  if (mlp_) mlp_->collect(registry_);
  for (std::size_t h = 0; h < heads_.size(); ++h) {
    const std::string prefix = "head." + spec_.labels[h].name;
    registry_.push_back({prefix + ".weight", heads_[h].weight});
    registry_.push_back({prefix + ".bias", heads_[h].bias});
  }
}

grad::Tensor ModelAssembly::features(grad::Tape& tape, const std::optional<grad::Tensor>& images,
                                     const std::optional<grad::Tensor>& tabular, Mode mode,
                                     Rng& dropout_rng) const {
  std::optional<grad::Tensor> image_features;
  std::optional<grad::Tensor> tabular_features;
  if (cnn_) {
    if (!images) throw ConfigError("model expects an image block but the batch has none");
    image_features = cnn_->forward(tape, *images);
  }
  if (mlp_) {
    if (!tabular) throw ConfigError("model expects a tabular block but the batch has none");
    tabular_features = mlp_->forward(tape, *tabular, mode, dropout_rng);
  }
  return mix_features(tape, image_features, tabular_features);
}

std::vector<grad::Tensor> ModelAssembly::heads_forward(grad::Tape& tape,
                                                       const grad::Tensor& mixed) const {
  if (mixed.rank() != 2 || mixed.dim(1) != spec_.mixed_width()) {
    throw ShapeError("heads expect [batch, " + std::to_string(spec_.mixed_width()) +
                     "] features, got " + grad::shape_string(mixed.shape()));
  }
  std::vector<grad::Tensor> outputs;
  outputs.reserve(heads_.size());
  for (const Linear& head : heads_) outputs.push_back(head.forward(tape, mixed));
  return outputs;
}

std::vector<grad::Tensor> ModelAssembly::forward(grad::Tape& tape,
                                                 const std::optional<grad::Tensor>& images,
                                                 const std::optional<grad::Tensor>& tabular,
                                                 Mode mode, Rng& dropout_rng) const {
  return heads_forward(tape, features(tape, images, tabular, mode, dropout_rng));
}

std::vector<grad::Tensor> ModelAssembly::parameter_tensors() const {
  std::vector<grad::Tensor> out;
  out.reserve(registry_.size());
  for (const NamedTensor& p : registry_) out.push_back(p.tensor);
  return out;
}

grad::Tensor ModelAssembly::parameter(std::string_view name) const {
  for (const NamedTensor& p : registry_)
    if (p.name == name) return p.tensor;
  throw ConfigError("no parameter named '" + std::string(name) + "'");
}

std::size_t ModelAssembly::parameter_count() const {
  std::size_t total = 0;
  for (const NamedTensor& p : registry_) total += p.tensor.numel();
  return total;
}

ModelAssembly build_model(Task task, std::vector<LabelSpec> labels, Modality modality,
                          std::optional<MlpSpec> mlp, std::optional<CnnSpec> cnn, Rng& init_rng) {
  ModelSpec spec;
  spec.task = task;
  spec.labels = std::move(labels);
  spec.modality = modality;
  spec.mlp = std::move(mlp);
  spec.cnn = std::move(cnn);
  return ModelAssembly::build(spec, init_rng);
}

grad::Tensor mix_features(grad::Tape& tape, const std::optional<grad::Tensor>& image_features,
                          const std::optional<grad::Tensor>& tabular_features) {
  if (image_features && tabular_features) {
    return grad::concat_features(tape, *image_features, *tabular_features);
  }
  if (image_features) return *image_features;
  if (tabular_features) return *tabular_features;
  throw ConfigError("feature mixer needs at least one feature block");
}

grad::Tensor adapt_first_layer(const grad::Tensor& weight) {
  if (weight.rank() != 4 || weight.dim(1) != 3) {
    throw ShapeError("first-layer adaptation needs a [C_out, 3, k, k] kernel, got " +
                     grad::shape_string(weight.shape()));
  }
  const std::size_t c_out = weight.dim(0);
  const std::size_t area = weight.dim(2) * weight.dim(3);
  const auto w = weight.data();
  std::vector<float> summed(c_out * area);
  for (std::size_t o = 0; o < c_out; ++o) {
    for (std::size_t p = 0; p < area; ++p) {
      summed[o * area + p] =
          w[(o * 3 + 0) * area + p] + w[(o * 3 + 1) * area + p] + w[(o * 3 + 2) * area + p];
    }
  }
  return grad::Tensor({c_out, 1, weight.dim(2), weight.dim(3)}, std::move(summed),
                      weight.requires_grad());
}

}  // namespace nervus::model

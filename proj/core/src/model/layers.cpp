#include "nervus/model/layers.hpp"

#include <cmath>

#include "nervus/error.hpp"

namespace nervus::model {

grad::Tensor he_normal(grad::Shape shape, std::size_t fan_in, Rng& rng) {
  const double sigma = std::sqrt(2.0 / static_cast<double>(fan_in));
  std::vector<float> values(grad::numel_of(shape));
  for (float& v : values) v = static_cast<float>(sigma * rng.normal());
  return grad::Tensor(std::move(shape), std::move(values), true);
}

Linear Linear::init(std::size_t in, std::size_t out, Rng& rng) {
  return Linear{he_normal({in, out}, in, rng), grad::Tensor::zeros({out}, true)};
}

Conv2d Conv2d::init(std::size_t in, std::size_t out, Rng& rng) {
  return Conv2d{he_normal({out, in, 3, 3}, in * 9, rng), grad::Tensor::zeros({out}, true)};
}

MlpExtractor::MlpExtractor(const MlpSpec& spec, Rng& rng) : spec_(spec) {
  std::size_t in = spec.input_width;
  for (std::size_t h : spec.hidden) {
    layers_.push_back(Linear::init(in, h, rng));
    in = h;
  }
}

MlpExtractor MlpExtractor::deep_copy() const {
  MlpExtractor copy = *this;
  for (Linear& layer : copy.layers_) layer = layer.deep_copy();
  return copy;
}

grad::Tensor MlpExtractor::forward(grad::Tape& tape, const grad::Tensor& tabular, Mode mode,
                                   Rng& rng) const {
  if (tabular.rank() != 2 || tabular.dim(1) != spec_.input_width) {
    throw ShapeError("MLP expects [batch, " + std::to_string(spec_.input_width) + "] input, got " +
                     grad::shape_string(tabular.shape()));
  }
  grad::Tensor h = tabular;
  for (const Linear& layer : layers_) {
    h = layer.forward(tape, h);
    h = grad::relu(tape, h);
    h = grad::dropout(tape, h, spec_.dropout, mode, rng);
  }
  return h;
}

void MlpExtractor::collect(std::vector<NamedTensor>& out) const {
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const std::string prefix = "mlp.fc" + std::to_string(i);
    out.push_back({prefix + ".weight", layers_[i].weight});
    out.push_back({prefix + ".bias", layers_[i].bias});
  }
}

CnnExtractor::CnnExtractor(const CnnSpec& spec, Rng& rng) : spec_(spec) {
  std::size_t in = static_cast<std::size_t>(spec.in_channels);
  std::size_t out = static_cast<std::size_t>(spec.base_channels);
  for (int d = 0; d < spec.depth; ++d) {
    blocks_.push_back(Conv2d::init(in, out, rng));
    in = out;
    out *= 2;
  }
}

CnnExtractor CnnExtractor::deep_copy() const {
  CnnExtractor copy = *this;
  for (Conv2d& block : copy.blocks_) block = block.deep_copy();
  return copy;
}

grad::Tensor CnnExtractor::forward(grad::Tape& tape, const grad::Tensor& images) const {
  if (images.rank() != 4 || images.dim(1) != static_cast<std::size_t>(spec_.in_channels)) {
    throw ShapeError("CNN expects [batch, " + std::to_string(spec_.in_channels) +
                     ", H, W] input, got " + grad::shape_string(images.shape()));
  }
  if (images.dim(2) < spec_.min_extent() || images.dim(3) < spec_.min_extent()) {
    throw ShapeError("image " + std::to_string(images.dim(2)) + "x" + std::to_string(images.dim(3)) +
                     " too small for CNN depth " + std::to_string(spec_.depth) + " (needs " +
                     std::to_string(spec_.min_extent()) + ")");
  }
  grad::Tensor h = images;
  for (const Conv2d& block : blocks_) {
    h = block.forward(tape, h);
    h = grad::relu(tape, h);
    h = grad::max_pool2d(tape, h);
  }
  return grad::global_avg_pool(tape, h);
}

void CnnExtractor::collect(std::vector<NamedTensor>& out) const {
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    const std::string prefix = "cnn.conv" + std::to_string(i);
    out.push_back({prefix + ".weight", blocks_[i].weight});
    out.push_back({prefix + ".bias", blocks_[i].bias});
  }
}

}  // namespace nervus::model

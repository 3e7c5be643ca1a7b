#pragma once

#include <string>
#include <vector>

#include "nervus/grad/ops.hpp"
#include "nervus/model/spec.hpp"
#include "nervus/random.hpp"

namespace nervus::model {

/// Named view of a trainable tensor; names are stable checkpoint keys.
struct NamedTensor {
  std::string name;
  grad::Tensor tensor;
};

/// Fully connected layer, weight [in, out], bias [out].
struct Linear {
  grad::Tensor weight;
  grad::Tensor bias;

  static Linear init(std::size_t in, std::size_t out, Rng& rng);
  Linear deep_copy() const { return {weight.clone(true), bias.clone(true)}; }
  grad::Tensor forward(grad::Tape& tape, const grad::Tensor& x) const {
    return grad::linear(tape, x, weight, bias);
  }
};

/// 3x3 convolution with padding 1, weight [out, in, 3, 3].
struct Conv2d {
  grad::Tensor weight;
  grad::Tensor bias;

  static Conv2d init(std::size_t in, std::size_t out, Rng& rng);
  Conv2d deep_copy() const { return {weight.clone(true), bias.clone(true)}; }
  grad::Tensor forward(grad::Tape& tape, const grad::Tensor& x) const {
    return grad::conv2d(tape, x, weight, bias, 1, 1);
  }
};

// (linear -> relu -> dropout) per hidden width.
class MlpExtractor {
 public:
  MlpExtractor(const MlpSpec& spec, Rng& rng);
  MlpExtractor deep_copy() const;

  grad::Tensor forward(grad::Tape& tape, const grad::Tensor& tabular, Mode mode, Rng& rng) const;
  void collect(std::vector<NamedTensor>& out) const;

  const MlpSpec& spec() const { return spec_; }
  const std::vector<Linear>& layers() const { return layers_; }

 private:
  MlpSpec spec_;
  std::vector<Linear> layers_;
};

// depth x (conv3x3 -> relu -> maxpool2x2), then global average pooling.
class CnnExtractor {
 public:
  CnnExtractor(const CnnSpec& spec, Rng& rng);
  CnnExtractor deep_copy() const;

  grad::Tensor forward(grad::Tape& tape, const grad::Tensor& images) const;
  void collect(std::vector<NamedTensor>& out) const;

  const CnnSpec& spec() const { return spec_; }
  const std::vector<Conv2d>& blocks() const { return blocks_; }

 private:
  CnnSpec spec_;
  std::vector<Conv2d> blocks_;
};

/// He-normal weights: N(0, 2 / fan_in).
grad::Tensor he_normal(grad::Shape shape, std::size_t fan_in, Rng& rng);

}  // namespace nervus::model

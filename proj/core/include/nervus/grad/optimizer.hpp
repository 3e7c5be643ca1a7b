#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "nervus/grad/tensor.hpp"

namespace nervus::grad {

enum class OptimizerKind { kSgd, kAdam };

struct OptimizerOptions {
  OptimizerKind kind = OptimizerKind::kAdam;
  float learning_rate = 1e-3f;
  float momentum = 0.0f;  // sgd only
};

// Moment buffers are bound to the parameter list given at construction and
// indexed by position in it.
class Optimizer {
 public:
  static constexpr float kBeta1 = 0.9f;
  static constexpr float kBeta2 = 0.999f;
  static constexpr float kEpsilon = 1e-8f;

  Optimizer(OptimizerOptions options, std::span<const Tensor> params);

  /// Applies one update. Every parameter must carry a finite gradient.
  void step(std::span<Tensor> params);
  void zero_grad(std::span<Tensor> params) const;

  const OptimizerOptions& options() const { return options_; }
  std::int64_t steps() const { return steps_; }
  std::span<const float> first_moment(std::size_t index) const { return first_[index]; }
  std::span<const float> second_moment(std::size_t index) const { return second_[index]; }

 private:
  OptimizerOptions options_;
  std::vector<Shape> shapes_;
  std::vector<std::vector<float>> first_;   // adam m / sgd velocity
  std::vector<std::vector<float>> second_;  // adam v
  std::int64_t steps_ = 0;
};

}  // namespace nervus::grad

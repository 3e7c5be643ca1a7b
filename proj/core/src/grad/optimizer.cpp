#include "nervus/grad/optimizer.hpp"

#include <cmath>

#include "nervus/error.hpp"

namespace nervus::grad {

Optimizer::Optimizer(OptimizerOptions options, std::span<const Tensor> params)
    : options_(options) {
  if (!(options_.learning_rate > 0.0f) || !std::isfinite(options_.learning_rate)) {
    throw ConfigError("learning rate must be positive and finite");
  }
  if (options_.momentum < 0.0f || options_.momentum >= 1.0f) {
    throw ConfigError("sgd momentum must lie in [0, 1)");
  }
  for (const Tensor& p : params) {
    shapes_.push_back(p.shape());
    first_.emplace_back(p.numel(), 0.0f);
    if (options_.kind == OptimizerKind::kAdam) second_.emplace_back(p.numel(), 0.0f);
  }
}

void Optimizer::step(std::span<Tensor> params) {
  if (params.size() != shapes_.size()) {
    throw Error("optimizer: parameter list changed since construction");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].shape() != shapes_[i]) {
      throw ShapeError("optimizer: parameter " + std::to_string(i) + " changed shape");
    }
    if (!params[i].has_grad()) {
      throw Error("optimizer: parameter " + std::to_string(i) + " has no gradient");
    }
    check_finite(params[i].grad(), "optimizer gradient");
  }

  ++steps_;
  const float lr = options_.learning_rate;
  if (options_.kind == OptimizerKind::kSgd) {
    const float mu = options_.momentum;
    for (std::size_t i = 0; i < params.size(); ++i) {
      auto theta = params[i].mutable_data();
      const auto g = params[i].grad();
      if (mu == 0.0f) {
        for (std::size_t j = 0; j < theta.size(); ++j) theta[j] -= lr * g[j];
      } else {
        auto& velocity = first_[i];
        for (std::size_t j = 0; j < theta.size(); ++j) {
          velocity[j] = mu * velocity[j] + g[j];
          theta[j] -= lr * velocity[j];
        }
      }
    }
    return;
  }

  const double t = static_cast<double>(steps_);
  const float correction1 = static_cast<float>(1.0 - std::pow(double{kBeta1}, t));
  const float correction2 = static_cast<float>(1.0 - std::pow(double{kBeta2}, t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto theta = params[i].mutable_data();
    const auto g = params[i].grad();
    auto& m = first_[i];
    auto& v = second_[i];
    for (std::size_t j = 0; j < theta.size(); ++j) {
      m[j] = kBeta1 * m[j] + (1.0f - kBeta1) * g[j];
      v[j] = kBeta2 * v[j] + (1.0f - kBeta2) * g[j] * g[j];
      const float m_hat = m[j] / correction1;
      const float v_hat = v[j] / correction2;
      theta[j] -= lr * m_hat / (std::sqrt(v_hat) + kEpsilon);
    }
  }
}

void Optimizer::zero_grad(std::span<Tensor> params) const {
  for (Tensor& p : params) p.zero_grad();
}

}  // namespace nervus::grad

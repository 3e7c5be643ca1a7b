#include "nervus/grad/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "nervus/error.hpp"

namespace nervus::grad {

std::size_t numel_of(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t extent : shape) n *= extent;
  return n;
}

std::string shape_string(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out << ',';
    out << shape[i];
  }
  out << ']';
  return out.str();
}

void check_finite(std::span<const float> values, const char* what) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      std::ostringstream msg;
      msg << what << ": non-finite value " << values[i] << " at flat index " << i;
      throw NumericError(msg.str());
    }
  }
}

Tensor::Tensor(Shape shape, std::vector<float> values, bool requires_grad) {
  for (std::size_t extent : shape) {
    if (extent == 0) throw ShapeError("tensor extents must be positive, got " + shape_string(shape));
  }
  if (numel_of(shape) != values.size()) {
    std::ostringstream msg;
    msg << "tensor shape " << shape_string(shape) << " needs " << numel_of(shape)
        << " values, got " << values.size();
    throw ShapeError(msg.str());
  }
  check_finite(values, "tensor construction");
  impl_ = std::make_shared<Impl>();
  impl_->shape = std::move(shape);
  impl_->data = std::move(values);
  impl_->requires_grad = requires_grad;
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  const std::size_t n = numel_of(shape);
  return Tensor(std::move(shape), std::vector<float>(n, 0.0f), requires_grad);
}

Tensor Tensor::scalar(float value, bool requires_grad) {
  return Tensor({1}, {value}, requires_grad);
}

Tensor::Impl& Tensor::impl() const {
  if (!impl_) throw Error("use of an undefined tensor");
  return *impl_;
}

const Shape& Tensor::shape() const { return impl().shape; }

std::size_t Tensor::dim(std::size_t axis) const {
  const Shape& s = shape();
  if (axis >= s.size()) throw ShapeError("axis out of range for shape " + shape_string(s));
  return s[axis];
}

std::size_t Tensor::numel() const { return impl().data.size(); }

std::span<const float> Tensor::data() const { return impl().data; }
std::span<float> Tensor::mutable_data() { return impl().data; }

float Tensor::item() const {
  if (numel() != 1) throw ShapeError("item() on tensor of shape " + shape_string(shape()));
  return impl().data[0];
}

bool Tensor::requires_grad() const { return impl().requires_grad; }
void Tensor::set_requires_grad(bool enabled) { impl().requires_grad = enabled; }

bool Tensor::has_grad() const { return impl().has_grad; }

std::span<const float> Tensor::grad() const {
  if (!impl().has_grad) throw Error("tensor has no gradient");
  return impl().grad;
}

std::span<float> Tensor::grad_buffer() {
  Impl& self = impl();
  if (!self.has_grad) {
    self.grad.assign(self.data.size(), 0.0f);
    self.has_grad = true;
  }
  return self.grad;
}

void Tensor::zero_grad() {
  Impl& self = impl();
  if (self.has_grad) std::fill(self.grad.begin(), self.grad.end(), 0.0f);
}

void Tensor::clear_grad() {
  Impl& self = impl();
  self.grad.clear();
  self.grad.shrink_to_fit();
  self.has_grad = false;
}

Tensor Tensor::clone(bool requires_grad) const {
  const Impl& self = impl();
  return Tensor(self.shape, self.data, requires_grad);
}

}  // namespace nervus::grad

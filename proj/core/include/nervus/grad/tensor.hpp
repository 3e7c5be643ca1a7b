#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace nervus::grad {

using Shape = std::vector<std::size_t>;

std::size_t numel_of(const Shape& shape);
std::string shape_string(const Shape& shape);

// Row-major single-precision array. Tensor is a shared handle: copies alias the
// same storage, which is how the tape refers back to values and gradients.
class Tensor {
 public:
  Tensor() = default;

  /// Validates product(shape) == values.size() and that all values are finite.
  Tensor(Shape shape, std::vector<float> values, bool requires_grad = false);

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor scalar(float value, bool requires_grad = false);

  bool defined() const { return impl_ != nullptr; }

  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t numel() const;

  std::span<const float> data() const;
  std::span<float> mutable_data();
  float item() const;

  bool requires_grad() const;
  void set_requires_grad(bool enabled);

  /// True once a backward pass (or an explicit grad_buffer call) touched it.
  bool has_grad() const;
  std::span<const float> grad() const;
  /// Gradient storage, zero-allocated on first use.
  std::span<float> grad_buffer();
  void zero_grad();
  void clear_grad();

  /// Deep copy of the values; the copy does not share storage or gradient.
  Tensor clone(bool requires_grad = false) const;

  bool same_storage(const Tensor& other) const { return impl_ == other.impl_; }

 private:
  struct Impl {
    Shape shape;
    std::vector<float> data;
    std::vector<float> grad;
    bool requires_grad = false;
    bool has_grad = false;
  };

  Impl& impl() const;

  std::shared_ptr<Impl> impl_;
};

/// Throws NumericError naming `what` if any value is NaN/Inf.
void check_finite(std::span<const float> values, const char* what);

}  // namespace nervus::grad

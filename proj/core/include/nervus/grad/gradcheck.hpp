#pragma once

#include <functional>
#include <vector>

#include "nervus/grad/tape.hpp"
#include "nervus/grad/tensor.hpp"

namespace nervus::grad {

/// Scalar-valued function of the checked inputs, evaluated on the given tape.
using ScalarFn = std::function<Tensor(Tape&)>;

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t checked = 0;  // number of coordinates compared
};

// Compares backward-pass gradients of `f` with central differences
// (f(x+eps) - f(x-eps)) / (2 eps), coordinate by coordinate, over every tensor
// in `inputs`. The relative error uses max(1, |analytic|, |numeric|) as the
// denominator. `f` must read the inputs by handle so perturbations are visible.
GradCheckResult finite_diff_check(const ScalarFn& f, std::vector<Tensor> inputs,
                                  double eps = 1e-3);

}  // namespace nervus::grad

#include "nervus/grad/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "nervus/error.hpp"

namespace nervus::grad {

GradCheckResult finite_diff_check(const ScalarFn& f, std::vector<Tensor> inputs, double eps) {
  if (!(eps > 0.0)) throw Error("finite_diff_check: eps must be positive");

  std::vector<bool> previously_enabled;
  for (Tensor& t : inputs) {
    previously_enabled.push_back(t.requires_grad());
    t.set_requires_grad(true);
    t.clear_grad();
  }

  std::vector<std::vector<float>> analytic;
  {
    Tape tape;
    Tensor out = f(tape);
    if (out.numel() != 1) throw ShapeError("finite_diff_check: f must return a scalar");
    tape.backward(out);
    for (Tensor& t : inputs) {
      if (t.has_grad()) {
        analytic.emplace_back(t.grad().begin(), t.grad().end());
      } else {
        analytic.emplace_back(t.numel(), 0.0f);
      }
    }
  }

  auto evaluate = [&]() {
    Tape tape(Tape::Recording::kOff);
    return static_cast<double>(f(tape).item());
  };

  GradCheckResult result;
  for (std::size_t ti = 0; ti < inputs.size(); ++ti) {
    auto values = inputs[ti].mutable_data();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const float original = values[i];
      const float plus = static_cast<float>(original + eps);
      const float minus = static_cast<float>(original - eps);
      values[i] = plus;
      const double f_plus = evaluate();
      values[i] = minus;
      const double f_minus = evaluate();
      values[i] = original;

      // Divide by the step actually representable in single precision.
      const double numeric = (f_plus - f_minus) / (static_cast<double>(plus) - minus);
      const double a = analytic[ti][i];
      const double denom = std::max({1.0, std::abs(a), std::abs(numeric)});
      result.max_relative_error = std::max(result.max_relative_error, std::abs(a - numeric) / denom);
      ++result.checked;
    }
  }

  for (std::size_t ti = 0; ti < inputs.size(); ++ti) {
    inputs[ti].clear_grad();
    inputs[ti].set_requires_grad(previously_enabled[ti]);
  }
  return result;
}

}  // namespace nervus::grad

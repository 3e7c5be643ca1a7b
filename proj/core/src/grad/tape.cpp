#include "nervus/grad/tape.hpp"

#include <algorithm>

#include "nervus/error.hpp"

namespace nervus::grad {

bool Tape::wants(std::span<const Tensor> inputs) const {
  if (!recording_) return false;
  return std::any_of(inputs.begin(), inputs.end(),
                     [](const Tensor& t) { return t.defined() && t.requires_grad(); });
}

void Tape::record(std::vector<Tensor> inputs, Tensor output, BackwardFn backward) {
  output.set_requires_grad(true);
  entries_.push_back(Entry{std::move(inputs), std::move(output), std::move(backward)});
}

void Tape::backward(const Tensor& loss) {
  if (!loss.defined() || loss.numel() != 1) {
    throw ShapeError("backward needs a scalar loss");
  }
  auto producer = std::find_if(entries_.rbegin(), entries_.rend(),
                               [&](const Entry& e) { return e.output.same_storage(loss); });
  if (producer == entries_.rend()) {
    throw Error("backward: loss was not produced on this tape");
  }
  // Intermediate gradients restart on every sweep; leaf gradients accumulate.
  for (Entry& e : entries_) e.output.clear_grad();
  Tensor root = loss;
  root.grad_buffer()[0] = 1.0f;

  for (auto it = producer; it != entries_.rend(); ++it) {
    if (!it->output.has_grad()) continue;  // not reachable from the loss
    it->backward(it->output, it->inputs);
  }
}

}  // namespace nervus::grad

#pragma once

#include <functional>
#include <span>
#include <vector>

#include "nervus/grad/tensor.hpp"

namespace nervus::grad {

/// Propagates output.grad() into the inputs that require a gradient.
using BackwardFn = std::function<void(const Tensor& output, std::span<Tensor> inputs)>;

// Ordered log of differentiable operations. Entries are appended in execution
// order, so the log is already topologically sorted and backward is a single
// reverse sweep. A tape and the parameters it touches belong to one owner.
class Tape {
 public:
  enum class Recording { kOn, kOff };

  explicit Tape(Recording recording = Recording::kOn) : recording_(recording == Recording::kOn) {}

  bool recording() const { return recording_; }

  /// True when an operation over `inputs` has to be recorded.
  bool wants(std::span<const Tensor> inputs) const;

  /// Appends an entry and marks `output` as gradient-carrying.
  void record(std::vector<Tensor> inputs, Tensor output, BackwardFn backward);

  std::size_t size() const { return entries_.size(); }
  void clear() { entries_.clear(); }

  /// Reverse-mode sweep from a scalar loss produced on this tape. Gradients
  /// accumulate into every grad-enabled tensor reachable from the loss.
  void backward(const Tensor& loss);

 private:
  struct Entry {
    std::vector<Tensor> inputs;
    Tensor output;
    BackwardFn backward;
  };

  bool recording_;
  std::vector<Entry> entries_;
};

inline void backward(const Tensor& loss, Tape& tape) { tape.backward(loss); }

}  // namespace nervus::grad

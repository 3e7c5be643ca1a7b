#pragma once

#include "nervus/grad/tape.hpp"
#include "nervus/grad/tensor.hpp"
#include "nervus/random.hpp"
#include "nervus/types.hpp"

// Differentiable tensor operations. Every op records itself on `tape` when the
// tape is recording and at least one input requires a gradient; otherwise it is
// a pure function of its inputs.
namespace nervus::grad {

/// y = x W + b for x [batch, in], W [in, out], b [out].
Tensor linear(Tape& tape, const Tensor& x, const Tensor& weight, const Tensor& bias);

/// Zero-padded cross-correlation. x [N, C_in, H, W], weight [C_out, C_in, k, k],
/// bias [C_out] -> [N, C_out, H', W'] with H' = (H + 2 pad - k) / stride + 1.
Tensor conv2d(Tape& tape, const Tensor& x, const Tensor& weight, const Tensor& bias,
              std::size_t stride = 1, std::size_t pad = 0);

/// max(0, x); the subgradient at exactly 0 is 0.
Tensor relu(Tape& tape, const Tensor& x);

/// Inverted dropout: in train mode zero each element with probability p and scale
/// survivors by 1/(1-p). Eval mode (or p == 0) returns x itself.
Tensor dropout(Tape& tape, const Tensor& x, float p, Mode mode, Rng& rng);

/// 2x2 max pooling with stride 2 over [N, C, H, W]; ties route the gradient to the
/// first element of the window in row-major order.
Tensor max_pool2d(Tape& tape, const Tensor& x);

/// Mean over spatial positions: [N, C, H, W] -> [N, C].
Tensor global_avg_pool(Tape& tape, const Tensor& x);

/// Row-wise log-softmax over the last axis of [batch, n], n >= 2.
Tensor log_softmax(Tape& tape, const Tensor& x);

/// Concatenate two [batch, *] blocks along the feature axis (a first).
Tensor concat_features(Tape& tape, const Tensor& a, const Tensor& b);

/// Elementwise sum and product of equal-shape tensors.
Tensor add(Tape& tape, const Tensor& a, const Tensor& b);
Tensor mul(Tape& tape, const Tensor& a, const Tensor& b);

/// Sum of all elements (accumulated in double) as a [1] tensor.
Tensor sum(Tape& tape, const Tensor& x);

}  // namespace nervus::grad

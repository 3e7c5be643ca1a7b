#include "nervus/grad/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "grad/kernels.hpp"
#include "nervus/error.hpp"

namespace nervus::grad {
namespace {

void expect_rank(const Tensor& t, std::size_t rank, const char* op, const char* arg) {
  if (t.rank() != rank) {
    std::ostringstream msg;
    msg << op << ": " << arg << " must have rank " << rank << ", got " << shape_string(t.shape());
    throw ShapeError(msg.str());
  }
}

Tensor finish(Shape shape, std::vector<float> values, const char* op) {
  check_finite(values, op);
  return Tensor(std::move(shape), std::move(values));
}

// Column buffer [C_in*k*k, H_out*W_out] for one image.
void im2col(const float* image, std::size_t channels, std::size_t height, std::size_t width,
            std::size_t k, std::size_t stride, std::size_t pad, std::size_t out_h,
            std::size_t out_w, float* cols) {
  const std::size_t positions = out_h * out_w;
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t ky = 0; ky < k; ++ky) {
      for (std::size_t kx = 0; kx < k; ++kx) {
        float* row = cols + ((c * k + ky) * k + kx) * positions;
        for (std::size_t oy = 0; oy < out_h; ++oy) {
          const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * stride + ky) -
                                    static_cast<std::ptrdiff_t>(pad);
          for (std::size_t ox = 0; ox < out_w; ++ox) {
            const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * stride + kx) -
                                      static_cast<std::ptrdiff_t>(pad);
            const bool inside = iy >= 0 && ix >= 0 && iy < static_cast<std::ptrdiff_t>(height) &&
                                ix < static_cast<std::ptrdiff_t>(width);
            row[oy * out_w + ox] =
                inside ? image[(c * height + static_cast<std::size_t>(iy)) * width +
                               static_cast<std::size_t>(ix)]
                       : 0.0f;
          }
        }
      }
    }
  }
}

void col2im_add(const float* cols, std::size_t channels, std::size_t height, std::size_t width,
                std::size_t k, std::size_t stride, std::size_t pad, std::size_t out_h,
                std::size_t out_w, float* image) {
  const std::size_t positions = out_h * out_w;
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t ky = 0; ky < k; ++ky) {
      for (std::size_t kx = 0; kx < k; ++kx) {
        const float* row = cols + ((c * k + ky) * k + kx) * positions;
        for (std::size_t oy = 0; oy < out_h; ++oy) {
          const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * stride + ky) -
                                    static_cast<std::ptrdiff_t>(pad);
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(height)) continue;
          for (std::size_t ox = 0; ox < out_w; ++ox) {
            const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * stride + kx) -
                                      static_cast<std::ptrdiff_t>(pad);
            if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(width)) continue;
            image[(c * height + static_cast<std::size_t>(iy)) * width +
                  static_cast<std::size_t>(ix)] += row[oy * out_w + ox];
          }
        }
      }
    }
  }
}

}  // namespace

Tensor linear(Tape& tape, const Tensor& x, const Tensor& weight, const Tensor& bias) {
  expect_rank(x, 2, "linear", "x");
  expect_rank(weight, 2, "linear", "weight");
  expect_rank(bias, 1, "linear", "bias");
  const std::size_t batch = x.dim(0), in = x.dim(1), out = weight.dim(1);
  if (weight.dim(0) != in || bias.dim(0) != out) {
    std::ostringstream msg;
    msg << "linear: x " << shape_string(x.shape()) << ", weight " << shape_string(weight.shape())
        << ", bias " << shape_string(bias.shape()) << " do not agree";
    throw ShapeError(msg.str());
  }

  std::vector<float> y(batch * out);
  const auto b = bias.data();
  for (std::size_t r = 0; r < batch; ++r) std::copy(b.begin(), b.end(), y.begin() + r * out);
  kernels::gemm_nn(batch, out, in, x.data().data(), weight.data().data(), y.data());
  Tensor result = finish({batch, out}, std::move(y), "linear");

  if (tape.wants(std::vector<Tensor>{x, weight, bias})) {
    tape.record({x, weight, bias}, result,
                [batch, in, out](const Tensor& output, std::span<Tensor> inputs) {
                  const float* dy = output.grad().data();
                  Tensor& xi = inputs[0];
                  Tensor& wi = inputs[1];
                  Tensor& bi = inputs[2];
                  if (xi.requires_grad()) {
                    kernels::gemm_nt(batch, in, out, dy, wi.data().data(),
                                     xi.grad_buffer().data());
                  }
                  if (wi.requires_grad()) {
                    kernels::gemm_tn(in, out, batch, xi.data().data(), dy,
                                     wi.grad_buffer().data());
                  }
                  if (bi.requires_grad()) {
                    auto db = bi.grad_buffer();
                    for (std::size_t r = 0; r < batch; ++r)
                      for (std::size_t j = 0; j < out; ++j) db[j] += dy[r * out + j];
                  }
                });
  }
  return result;
}

Tensor conv2d(Tape& tape, const Tensor& x, const Tensor& weight, const Tensor& bias,
              std::size_t stride, std::size_t pad) {
  expect_rank(x, 4, "conv2d", "x");
  expect_rank(weight, 4, "conv2d", "weight");
  expect_rank(bias, 1, "conv2d", "bias");
  if (stride == 0) throw ShapeError("conv2d: stride must be positive");
  const std::size_t n = x.dim(0), c_in = x.dim(1), h = x.dim(2), w = x.dim(3);
  const std::size_t c_out = weight.dim(0), k = weight.dim(2);
  if (weight.dim(1) != c_in) {
    std::ostringstream msg;
    msg << "conv2d: input has " << c_in << " channels but weight expects " << weight.dim(1);
    throw ShapeError(msg.str());
  }
  if (weight.dim(3) != k) throw ShapeError("conv2d: kernel must be square");
  if (bias.dim(0) != c_out) throw ShapeError("conv2d: bias length differs from output channels");
  if (k > h + 2 * pad || k > w + 2 * pad) {
    std::ostringstream msg;
    msg << "conv2d: kernel " << k << " larger than padded input " << h + 2 * pad << "x"
        << w + 2 * pad;
    throw ShapeError(msg.str());
  }
  const std::size_t out_h = (h + 2 * pad - k) / stride + 1;
  const std::size_t out_w = (w + 2 * pad - k) / stride + 1;
  const std::size_t positions = out_h * out_w;
  const std::size_t patch = c_in * k * k;

  std::vector<float> y(n * c_out * positions);
  std::vector<float> cols(patch * positions);
  const float* xd = x.data().data();
  const float* wd = weight.data().data();
  const auto bd = bias.data();
  for (std::size_t s = 0; s < n; ++s) {
    im2col(xd + s * c_in * h * w, c_in, h, w, k, stride, pad, out_h, out_w, cols.data());
    float* ys = y.data() + s * c_out * positions;
    for (std::size_t o = 0; o < c_out; ++o)
      std::fill(ys + o * positions, ys + (o + 1) * positions, bd[o]);
    kernels::gemm_nn(c_out, positions, patch, wd, cols.data(), ys);
  }
  Tensor result = finish({n, c_out, out_h, out_w}, std::move(y), "conv2d");

  if (tape.wants(std::vector<Tensor>{x, weight, bias})) {
    tape.record({x, weight, bias}, result,
                [=](const Tensor& output, std::span<Tensor> inputs) {
                  Tensor& xi = inputs[0];
                  Tensor& wi = inputs[1];
                  Tensor& bi = inputs[2];
                  const float* dy = output.grad().data();
                  std::vector<float> col_buf(patch * positions);
                  std::vector<float> dcols;
                  if (xi.requires_grad()) dcols.resize(patch * positions);
                  for (std::size_t s = 0; s < n; ++s) {
                    const float* dys = dy + s * c_out * positions;
                    if (wi.requires_grad()) {
                      im2col(xi.data().data() + s * c_in * h * w, c_in, h, w, k, stride, pad,
                             out_h, out_w, col_buf.data());
                      kernels::gemm_nt(c_out, patch, positions, dys, col_buf.data(),
                                       wi.grad_buffer().data());
                    }
                    if (xi.requires_grad()) {
                      std::fill(dcols.begin(), dcols.end(), 0.0f);
                      kernels::gemm_tn(patch, positions, c_out, wi.data().data(), dys,
                                       dcols.data());
                      col2im_add(dcols.data(), c_in, h, w, k, stride, pad, out_h, out_w,
                                 xi.grad_buffer().data() + s * c_in * h * w);
                    }
                    if (bi.requires_grad()) {
                      auto db = bi.grad_buffer();
                      for (std::size_t o = 0; o < c_out; ++o) {
                        float acc = 0.0f;
                        for (std::size_t p = 0; p < positions; ++p) acc += dys[o * positions + p];
                        db[o] += acc;
                      }
                    }
                  }
                });
  }
  return result;
}

Tensor relu(Tape& tape, const Tensor& x) {
  const auto xd = x.data();
  std::vector<float> y(xd.size());
  for (std::size_t i = 0; i < xd.size(); ++i) y[i] = xd[i] > 0.0f ? xd[i] : 0.0f;
  Tensor result = finish(x.shape(), std::move(y), "relu");
  if (tape.wants(std::vector<Tensor>{x})) {
    tape.record({x}, result, [](const Tensor& output, std::span<Tensor> inputs) {
      Tensor& xi = inputs[0];
      if (!xi.requires_grad()) return;
      const auto dy = output.grad();
      const auto xv = xi.data();
      auto dx = xi.grad_buffer();
      for (std::size_t i = 0; i < dx.size(); ++i)
        if (xv[i] > 0.0f) dx[i] += dy[i];
    });
  }
  return result;
}

Tensor dropout(Tape& tape, const Tensor& x, float p, Mode mode, Rng& rng) {
  if (!(p >= 0.0f && p < 1.0f)) {
    throw Error("dropout: probability must lie in [0, 1), got " + std::to_string(p));
  }
  if (mode == Mode::kEval || p == 0.0f) return x;

  const float scale = 1.0f / (1.0f - p);
  const auto xd = x.data();
  std::vector<float> mask(xd.size());
  std::vector<float> y(xd.size());
  for (std::size_t i = 0; i < xd.size(); ++i) {
    mask[i] = rng.bernoulli(p) ? 0.0f : scale;
    y[i] = xd[i] * mask[i];
  }
  Tensor result = finish(x.shape(), std::move(y), "dropout");
  if (tape.wants(std::vector<Tensor>{x})) {
    tape.record({x}, result,
                [mask = std::move(mask)](const Tensor& output, std::span<Tensor> inputs) {
                  Tensor& xi = inputs[0];
                  if (!xi.requires_grad()) return;
                  const auto dy = output.grad();
                  auto dx = xi.grad_buffer();
                  for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += dy[i] * mask[i];
                });
  }
  return result;
}

Tensor max_pool2d(Tape& tape, const Tensor& x) {
  expect_rank(x, 4, "max_pool2d", "x");
  const std::size_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  if (h < 2 || w < 2) {
    throw ShapeError("max_pool2d: spatial extent " + shape_string(x.shape()) +
                     " smaller than the 2x2 window");
  }
  const std::size_t out_h = h / 2, out_w = w / 2;
  const auto xd = x.data();
  std::vector<float> y(n * c * out_h * out_w);
  std::vector<std::size_t> argmax(y.size());
  for (std::size_t plane = 0; plane < n * c; ++plane) {
    const std::size_t in_base = plane * h * w;
    const std::size_t out_base = plane * out_h * out_w;
    for (std::size_t oy = 0; oy < out_h; ++oy) {
      for (std::size_t ox = 0; ox < out_w; ++ox) {
        std::size_t best = in_base + (2 * oy) * w + 2 * ox;
        for (std::size_t dy = 0; dy < 2; ++dy) {
          for (std::size_t dx = 0; dx < 2; ++dx) {
            const std::size_t idx = in_base + (2 * oy + dy) * w + 2 * ox + dx;
            if (xd[idx] > xd[best]) best = idx;  // strict: first occurrence wins ties
          }
        }
        y[out_base + oy * out_w + ox] = xd[best];
        argmax[out_base + oy * out_w + ox] = best;
      }
    }
  }
  Tensor result = finish({n, c, out_h, out_w}, std::move(y), "max_pool2d");
  if (tape.wants(std::vector<Tensor>{x})) {
    tape.record({x}, result,
                [argmax = std::move(argmax)](const Tensor& output, std::span<Tensor> inputs) {
                  Tensor& xi = inputs[0];
                  if (!xi.requires_grad()) return;
                  const auto dy = output.grad();
                  auto dx = xi.grad_buffer();
                  for (std::size_t i = 0; i < dy.size(); ++i) dx[argmax[i]] += dy[i];
                });
  }
  return result;
}

Tensor global_avg_pool(Tape& tape, const Tensor& x) {
  expect_rank(x, 4, "global_avg_pool", "x");
  const std::size_t n = x.dim(0), c = x.dim(1), area = x.dim(2) * x.dim(3);
  const auto xd = x.data();
  std::vector<float> y(n * c);
  for (std::size_t plane = 0; plane < n * c; ++plane) {
    double acc = 0.0;
    for (std::size_t i = 0; i < area; ++i) acc += xd[plane * area + i];
    y[plane] = static_cast<float>(acc / static_cast<double>(area));
  }
  Tensor result = finish({n, c}, std::move(y), "global_avg_pool");
  if (tape.wants(std::vector<Tensor>{x})) {
    tape.record({x}, result, [area](const Tensor& output, std::span<Tensor> inputs) {
      Tensor& xi = inputs[0];
      if (!xi.requires_grad()) return;
      const auto dy = output.grad();
      auto dx = xi.grad_buffer();
      const float inv = 1.0f / static_cast<float>(area);
      for (std::size_t plane = 0; plane < dy.size(); ++plane) {
        const float g = dy[plane] * inv;
        for (std::size_t i = 0; i < area; ++i) dx[plane * area + i] += g;
      }
    });
  }
  return result;
}

Tensor log_softmax(Tape& tape, const Tensor& x) {
  expect_rank(x, 2, "log_softmax", "x");
  const std::size_t rows = x.dim(0), cols = x.dim(1);
  if (cols < 2) throw ShapeError("log_softmax: need at least 2 classes per row");
  const auto xd = x.data();
  std::vector<float> y(rows * cols);
  for (std::size_t r = 0; r < rows; ++r) {
    const float* row = xd.data() + r * cols;
    const float peak = *std::max_element(row, row + cols);
    double total = 0.0;
    for (std::size_t j = 0; j < cols; ++j) total += std::exp(static_cast<double>(row[j] - peak));
    const double log_total = std::log(total);
    for (std::size_t j = 0; j < cols; ++j)
      y[r * cols + j] = static_cast<float>(static_cast<double>(row[j] - peak) - log_total);
  }
  Tensor result = finish({rows, cols}, std::move(y), "log_softmax");
  if (tape.wants(std::vector<Tensor>{x})) {
    tape.record({x}, result, [rows, cols](const Tensor& output, std::span<Tensor> inputs) {
      Tensor& xi = inputs[0];
      if (!xi.requires_grad()) return;
      // dx_j = dy_j - softmax_j * sum_k dy_k
      const auto dy = output.grad();
      const auto logp = output.data();
      auto dx = xi.grad_buffer();
      for (std::size_t r = 0; r < rows; ++r) {
        double dy_sum = 0.0;
        for (std::size_t j = 0; j < cols; ++j) dy_sum += dy[r * cols + j];
        for (std::size_t j = 0; j < cols; ++j) {
          const double p = std::exp(static_cast<double>(logp[r * cols + j]));
          dx[r * cols + j] += static_cast<float>(dy[r * cols + j] - p * dy_sum);
        }
      }
    });
  }
  return result;
}

Tensor concat_features(Tape& tape, const Tensor& a, const Tensor& b) {
  expect_rank(a, 2, "concat_features", "a");
  expect_rank(b, 2, "concat_features", "b");
  const std::size_t batch = a.dim(0);
  if (b.dim(0) != batch) {
    throw ShapeError("concat_features: batch extents differ (" + std::to_string(batch) + " vs " +
                     std::to_string(b.dim(0)) + ")");
  }
  const std::size_t wa = a.dim(1), wb = b.dim(1), width = wa + wb;
  std::vector<float> y(batch * width);
  const auto ad = a.data();
  const auto bd = b.data();
  for (std::size_t r = 0; r < batch; ++r) {
    std::copy_n(ad.begin() + r * wa, wa, y.begin() + r * width);
    std::copy_n(bd.begin() + r * wb, wb, y.begin() + r * width + wa);
  }
  Tensor result = finish({batch, width}, std::move(y), "concat_features");
  if (tape.wants(std::vector<Tensor>{a, b})) {
    tape.record({a, b}, result, [=](const Tensor& output, std::span<Tensor> inputs) {
      const auto dy = output.grad();
      if (inputs[0].requires_grad()) {
        auto da = inputs[0].grad_buffer();
        for (std::size_t r = 0; r < batch; ++r)
          for (std::size_t j = 0; j < wa; ++j) da[r * wa + j] += dy[r * width + j];
      }
      if (inputs[1].requires_grad()) {
        auto db = inputs[1].grad_buffer();
        for (std::size_t r = 0; r < batch; ++r)
          for (std::size_t j = 0; j < wb; ++j) db[r * wb + j] += dy[r * width + wa + j];
      }
    });
  }
  return result;
}

Tensor add(Tape& tape, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw ShapeError("add: shapes " + shape_string(a.shape()) + " and " +
                     shape_string(b.shape()) + " differ");
  }
  const auto ad = a.data();
  const auto bd = b.data();
  std::vector<float> y(ad.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = ad[i] + bd[i];
  Tensor result = finish(a.shape(), std::move(y), "add");
  if (tape.wants(std::vector<Tensor>{a, b})) {
    tape.record({a, b}, result, [](const Tensor& output, std::span<Tensor> inputs) {
      const auto dy = output.grad();
      for (Tensor& in : inputs) {
        if (!in.requires_grad()) continue;
        auto dx = in.grad_buffer();
        for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += dy[i];
      }
    });
  }
  return result;
}

Tensor mul(Tape& tape, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw ShapeError("mul: shapes " + shape_string(a.shape()) + " and " +
                     shape_string(b.shape()) + " differ");
  }
  const auto ad = a.data();
  const auto bd = b.data();
  std::vector<float> y(ad.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = ad[i] * bd[i];
  Tensor result = finish(a.shape(), std::move(y), "mul");
  if (tape.wants(std::vector<Tensor>{a, b})) {
    tape.record({a, b}, result, [](const Tensor& output, std::span<Tensor> inputs) {
      const auto dy = output.grad();
      // Read both operands before writing: a and b may alias (x * x).
      const auto av = inputs[0].data();
      const auto bv = inputs[1].data();
      if (inputs[0].requires_grad()) {
        auto da = inputs[0].grad_buffer();
        for (std::size_t i = 0; i < da.size(); ++i) da[i] += dy[i] * bv[i];
      }
      if (inputs[1].requires_grad()) {
        auto db = inputs[1].grad_buffer();
        for (std::size_t i = 0; i < db.size(); ++i) db[i] += dy[i] * av[i];
      }
    });
  }
  return result;
}

Tensor sum(Tape& tape, const Tensor& x) {
  const auto xd = x.data();
  double acc = 0.0;
  for (float v : xd) acc += v;
  Tensor result = finish({1}, {static_cast<float>(acc)}, "sum");
  if (tape.wants(std::vector<Tensor>{x})) {
    tape.record({x}, result, [](const Tensor& output, std::span<Tensor> inputs) {
      Tensor& xi = inputs[0];
      if (!xi.requires_grad()) return;
      const float g = output.grad()[0];
      for (float& d : xi.grad_buffer()) d += g;
    });
  }
  return result;
}

}  // namespace nervus::grad

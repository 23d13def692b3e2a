#pragma once

// Forward and backward kernels for the layer types used by the blockage CNN.
// Activations are channels-first (C x H x L). Backward functions accumulate
// parameter gradients into the supplied tensors, so a mini-batch is summed by
// calling them once per example.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <type_traits>
#include <vector>

#include "blockpred/nn/tensor.hpp"
#include "blockpred/rng.hpp"

namespace blockpred::nn {

// 3x3 kernel, zero padding 1, stride 1.
template <class T>
struct Conv2d {
  std::size_t in_channels = 0;
  std::size_t out_channels = 0;
  Tensor<T> weight; // out x in x 3 x 3
  Tensor<T> bias;   // out

  Conv2d() = default;
  Conv2d(std::size_t in, std::size_t out)
      : in_channels(in), out_channels(out), weight({out, in, 3, 3}), bias({out}) {}

  std::size_t param_count() const { return weight.size() + bias.size(); }
};

template <class T>
struct Conv2dGrads {
  Tensor<T> input;
  Tensor<T> weight;
  Tensor<T> bias;
};

namespace detail {

template <class T>
void check_conv_input(const Conv2d<T>& layer, const Tensor<T>& x) {
  if (x.rank() != 3 || x.dim(0) != layer.in_channels || x.dim(1) == 0 || x.dim(2) == 0)
    throw ShapeError("conv2d: expected input " + std::to_string(layer.in_channels) + "xHxL, got " +
                     shape_string(x.shape()));
}

// Planes stored with row stride S = L + 2 (one zero column on each side) and
// `guard` zeros before the first row, so every 3x3 tap is a constant offset
// into one flat array.
template <class T>
struct PaddedPlanes {
  std::size_t rows = 0, cols = 0, stride = 0, guard = 0, plane = 0;
  std::vector<T> data;

  PaddedPlanes(std::size_t channels, std::size_t rows_, std::size_t cols_, std::size_t guard_, std::size_t pad_rows)
      : rows(rows_), cols(cols_), stride(cols_ + 2), guard(guard_), plane(2 * guard_ + (rows_ + pad_rows) * stride),
        data(channels * plane, T(0)) {}

  T* base(std::size_t c) { return data.data() + c * plane + guard; }
  const T* base(std::size_t c) const { return data.data() + c * plane + guard; }
};

// Input planes with one zero row above and below: element (h, l) sits at
// base + (h + 1) * S + l + 1.
template <class T>
PaddedPlanes<T> pad_input(const Tensor<T>& x) {
  const std::size_t C = x.dim(0), H = x.dim(1), L = x.dim(2);
  PaddedPlanes<T> p(C, H, L, 1, 2);
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t h = 0; h < H; ++h) {
      const T* src = x.ptr() + (c * H + h) * L;
      std::copy(src, src + L, p.base(c) + (h + 1) * p.stride + 1);
    }
  }
  return p;
}

// Output-shaped planes without padding rows: element (h, l) sits at
// base + h * S + l + 1. Tap (kh, kw) of output index i reads input index
// i + kh * S + kw - 1 relative to pad_input's base.
template <class T>
PaddedPlanes<T> pad_output(const Tensor<T>& g, std::size_t guard) {
  const std::size_t C = g.dim(0), H = g.dim(1), L = g.dim(2);
  PaddedPlanes<T> p(C, H, L, guard, 0);
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t h = 0; h < H; ++h) {
      const T* src = g.ptr() + (c * H + h) * L;
      std::copy(src, src + L, p.base(c) + h * p.stride + 1);
    }
  }
  return p;
}

} // namespace detail

template <class T>
Tensor<T> conv2d_forward(const Conv2d<T>& layer, const Tensor<T>& x) {
  detail::check_conv_input(layer, x);
  const std::size_t C = layer.in_channels, O = layer.out_channels, H = x.dim(1), L = x.dim(2);
  const auto xp = detail::pad_input(x);
  const std::size_t S = xp.stride, n = H * S;
  std::vector<T> acc(n);
  Tensor<T> y({O, H, L});
  for (std::size_t o = 0; o < O; ++o) {
    std::fill(acc.begin(), acc.end(), layer.bias[o]);
    for (std::size_t c = 0; c < C; ++c) {
      const T* w = layer.weight.ptr() + (o * C + c) * 9;
      const T* __restrict xb = xp.base(c) - 1; // tap (kh, kw) at xb + i + kh * S + kw
      T* __restrict a = acc.data();
      const T w0 = w[0], w1 = w[1], w2 = w[2], w3 = w[3], w4 = w[4], w5 = w[5], w6 = w[6], w7 = w[7], w8 = w[8];
#pragma omp simd
      for (std::size_t i = 0; i < n; ++i) {
        const T* r0 = xb + i;
        const T* r1 = r0 + S;
        const T* r2 = r1 + S;
        a[i] += w0 * r0[0] + w1 * r0[1] + w2 * r0[2] + w3 * r1[0] + w4 * r1[1] + w5 * r1[2] + w6 * r2[0] +
                w7 * r2[1] + w8 * r2[2];
      }
    }
    for (std::size_t h = 0; h < H; ++h) {
      std::copy(acc.data() + h * S + 1, acc.data() + h * S + 1 + L, y.ptr() + (o * H + h) * L);
    }
  }
  return y;
}

// Accumulates dL/dW and dL/db; writes dL/dx into grad_input when it is non-null.
template <class T>
void conv2d_backward_into(const Conv2d<T>& layer, const Tensor<T>& x, const Tensor<T>& grad_out,
                          std::type_identity_t<Tensor<T>>* grad_input, Tensor<T>& grad_weight,
                          Tensor<T>& grad_bias) {
  detail::check_conv_input(layer, x);
  const std::size_t C = layer.in_channels, O = layer.out_channels, H = x.dim(1), L = x.dim(2);
  require_shape(grad_out, {O, H, L}, "conv2d backward grad_out");
  require_shape(grad_weight, layer.weight.shape(), "conv2d backward grad_weight");
  require_shape(grad_bias, layer.bias.shape(), "conv2d backward grad_bias");

  const auto xp = detail::pad_input(x);
  const std::size_t S = xp.stride, n = H * S;
  const auto gp = detail::pad_output(grad_out, 2 * S + 2);

  for (std::size_t o = 0; o < O; ++o) {
    const T* __restrict g = gp.base(o);
    T bsum = T(0);
    for (std::size_t i = 0; i < n; ++i) bsum += g[i];
    grad_bias[o] += bsum;
    for (std::size_t c = 0; c < C; ++c) {
      const T* __restrict xb = xp.base(c) - 1;
      T s0 = 0, s1 = 0, s2 = 0, s3 = 0, s4 = 0, s5 = 0, s6 = 0, s7 = 0, s8 = 0;
#pragma omp simd reduction(+ : s0, s1, s2, s3, s4, s5, s6, s7, s8)
      for (std::size_t i = 0; i < n; ++i) {
        const T gi = g[i];
        const T* r0 = xb + i;
        const T* r1 = r0 + S;
        const T* r2 = r1 + S;
        s0 += gi * r0[0];
        s1 += gi * r0[1];
        s2 += gi * r0[2];
        s3 += gi * r1[0];
        s4 += gi * r1[1];
        s5 += gi * r1[2];
        s6 += gi * r2[0];
        s7 += gi * r2[1];
        s8 += gi * r2[2];
      }
      T* gw = grad_weight.ptr() + (o * C + c) * 9;
      gw[0] += s0;
      gw[1] += s1;
      gw[2] += s2;
      gw[3] += s3;
      gw[4] += s4;
      gw[5] += s5;
      gw[6] += s6;
      gw[7] += s7;
      gw[8] += s8;
    }
  }

  if (!grad_input) return;
  // Input position P (relative to pad_input's base) receives w[kh][kw] * g[P - kh * S - kw + 1].
  const std::size_t np = (H + 2) * S;
  std::vector<T> acc(np);
  *grad_input = Tensor<T>({C, H, L});
  for (std::size_t c = 0; c < C; ++c) {
    std::fill(acc.begin(), acc.end(), T(0));
    T* __restrict a = acc.data();
    for (std::size_t o = 0; o < O; ++o) {
      const T* w = layer.weight.ptr() + (o * C + c) * 9;
      const T* gb = gp.base(o) + 1;
      const T w0 = w[0], w1 = w[1], w2 = w[2], w3 = w[3], w4 = w[4], w5 = w[5], w6 = w[6], w7 = w[7], w8 = w[8];
#pragma omp simd
      for (std::size_t p = 0; p < np; ++p) {
        const T* r0 = gb + p - 2 * S; // kh = 2
        const T* r1 = r0 + S;         // kh = 1
        const T* r2 = r1 + S;         // kh = 0
        a[p] += w8 * r0[-2] + w7 * r0[-1] + w6 * r0[0] + w5 * r1[-2] + w4 * r1[-1] + w3 * r1[0] + w2 * r2[-2] +
                w1 * r2[-1] + w0 * r2[0];
      }
    }
    for (std::size_t h = 0; h < H; ++h) {
      std::copy(acc.data() + (h + 1) * S + 1, acc.data() + (h + 1) * S + 1 + L, grad_input->ptr() + (c * H + h) * L);
    }
  }
}

template <class T>
Conv2dGrads<T> conv2d_backward(const Conv2d<T>& layer, const Tensor<T>& x, const Tensor<T>& grad_out) {
  Conv2dGrads<T> g{{}, Tensor<T>(layer.weight.shape()), Tensor<T>(layer.bias.shape())};
  conv2d_backward_into(layer, x, grad_out, &g.input, g.weight, g.bias);
  return g;
}

template <class T>
Tensor<T> relu_forward(const Tensor<T>& x) {
  Tensor<T> y = x;
  for (auto& v : y.data()) v = v > T(0) ? v : T(0);
  return y;
}

// Subgradient at 0 is 0.
template <class T>
Tensor<T> relu_backward(const Tensor<T>& x, const Tensor<T>& grad_out) {
  require_shape(grad_out, x.shape(), "relu backward");
  Tensor<T> g = grad_out;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!(x[i] > T(0))) g[i] = T(0);
  }
  return g;
}

// Non-overlapping max pooling (stride equals kernel).
struct MaxPool2d {
  std::size_t kernel_h = 1;
  std::size_t kernel_w = 1;

  Shape output_shape(const Shape& in) const {
    if (in.size() != 3 || in[1] % kernel_h != 0 || in[2] % kernel_w != 0)
      throw ShapeError("maxpool: input " + shape_string(in) + " not divisible by kernel (" +
                       std::to_string(kernel_h) + "," + std::to_string(kernel_w) + ")");
    return {in[0], in[1] / kernel_h, in[2] / kernel_w};
  }
};

// argmax receives, per output element, the flat input index of the first maximum.
template <class T>
Tensor<T> maxpool_forward(const MaxPool2d& pool, const Tensor<T>& x, std::vector<std::uint32_t>* argmax = nullptr) {
  const Shape os = pool.output_shape(x.shape());
  const std::size_t C = os[0], Ho = os[1], Lo = os[2], H = x.dim(1), L = x.dim(2);
  Tensor<T> y(os);
  if (argmax) argmax->assign(y.size(), 0);
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t i = 0; i < Ho; ++i) {
      for (std::size_t j = 0; j < Lo; ++j) {
        std::size_t best = (c * H + i * pool.kernel_h) * L + j * pool.kernel_w;
        T best_v = x[best];
        for (std::size_t a = 0; a < pool.kernel_h; ++a) {
          const std::size_t row = (c * H + i * pool.kernel_h + a) * L + j * pool.kernel_w;
          for (std::size_t b = 0; b < pool.kernel_w; ++b) {
            if (x[row + b] > best_v) {
              best_v = x[row + b];
              best = row + b;
            }
          }
        }
        const std::size_t k = (c * Ho + i) * Lo + j;
        y[k] = best_v;
        if (argmax) (*argmax)[k] = static_cast<std::uint32_t>(best);
      }
    }
  }
  return y;
}

template <class T>
Tensor<T> maxpool_backward(const Shape& input_shape, const std::vector<std::uint32_t>& argmax,
                           const Tensor<T>& grad_out) {
  if (argmax.size() != grad_out.size()) throw ShapeError("maxpool backward: argmax/grad size mismatch");
  Tensor<T> g(input_shape);
  for (std::size_t k = 0; k < argmax.size(); ++k) g[argmax[k]] += grad_out[k];
  return g;
}

template <class T>
struct Dense {
  std::size_t in_features = 0;
  std::size_t out_features = 0;
  Tensor<T> weight; // out x in
  Tensor<T> bias;   // out

  Dense() = default;
  Dense(std::size_t in, std::size_t out) : in_features(in), out_features(out), weight({out, in}), bias({out}) {}

  std::size_t param_count() const { return weight.size() + bias.size(); }
};

template <class T>
Tensor<T> dense_forward(const Dense<T>& layer, const Tensor<T>& x) {
  if (x.size() != layer.in_features)
    throw ShapeError("dense: expected " + std::to_string(layer.in_features) + " inputs, got " +
                     std::to_string(x.size()));
  Tensor<T> y({layer.out_features});
  for (std::size_t o = 0; o < layer.out_features; ++o) {
    const T* w = layer.weight.ptr() + o * layer.in_features;
    T acc = layer.bias[o];
    for (std::size_t i = 0; i < layer.in_features; ++i) acc += w[i] * x[i];
    y[o] = acc;
  }
  return y;
}

// Returns dL/dx (shaped like x); accumulates dL/dW and dL/db.
template <class T>
Tensor<T> dense_backward(const Dense<T>& layer, const Tensor<T>& x, const Tensor<T>& grad_out, Tensor<T>& grad_weight,
                         Tensor<T>& grad_bias) {
  if (x.size() != layer.in_features || grad_out.size() != layer.out_features)
    throw ShapeError("dense backward: shape mismatch");
  Tensor<T> gx(x.shape());
  for (std::size_t o = 0; o < layer.out_features; ++o) {
    const T g = grad_out[o];
    const T* w = layer.weight.ptr() + o * layer.in_features;
    T* gw = grad_weight.ptr() + o * layer.in_features;
    for (std::size_t i = 0; i < layer.in_features; ++i) {
      gw[i] += g * x[i];
      gx[i] += g * w[i];
    }
    grad_bias[o] += g;
  }
  return gx;
}

enum class Mode { train, eval };

// Inverted dropout. In train mode, mask receives the per-element scale
// (0 or 1/(1-rate)); in eval mode the input is returned unchanged.
template <class T>
Tensor<T> dropout_forward(const Tensor<T>& x, double rate, Mode mode, Rng* rng, std::vector<T>* mask = nullptr) {
  if (!(rate >= 0.0 && rate < 1.0)) throw ConfigError("dropout: rate must be in [0, 1)");
  if (mode == Mode::eval || rate == 0.0) {
    if (mask) mask->assign(x.size(), T(1));
    return x;
  }
  if (!rng) throw ConfigError("dropout: train mode needs an rng");
  const T keep_scale = static_cast<T>(1.0 / (1.0 - rate));
  Tensor<T> y = x;
  if (mask) mask->resize(x.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    const T m = rng->bernoulli(rate) ? T(0) : keep_scale;
    y[i] *= m;
    if (mask) (*mask)[i] = m;
  }
  return y;
}

template <class T>
Tensor<T> dropout_backward(const std::vector<T>& mask, const Tensor<T>& grad_out) {
  if (mask.size() != grad_out.size()) throw ShapeError("dropout backward: mask size mismatch");
  Tensor<T> g = grad_out;
  for (std::size_t i = 0; i < g.size(); ++i) g[i] *= mask[i];
  return g;
}

// Uniform in +-sqrt(1/fan_in) for weights and biases.
template <class T>
void init_uniform_fan_in(Tensor<T>& weight, Tensor<T>& bias, std::size_t fan_in, Rng& rng) {
  const double bound = std::sqrt(1.0 / static_cast<double>(fan_in));
  for (auto& v : weight.data()) v = static_cast<T>(rng.uniform(-bound, bound));
  for (auto& v : bias.data()) v = static_cast<T>(rng.uniform(-bound, bound));
}

} // namespace blockpred::nn

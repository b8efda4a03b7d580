// Copyright 2026 The GLD-Net Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <algorithm>
#include <cstddef>
#include <vector>

#include "gldnet/ops.h"
#include "kernels.h"

namespace gldnet {

std::size_t conv_out_extent(std::size_t in, std::size_t kernel, std::size_t stride,
                            std::size_t pad, std::size_t dilation) {
  const std::size_t span = dilation * (kernel - 1) + 1;
  if (stride == 0 || kernel == 0 || in + 2 * pad < span) {
    throw DimensionError("conv2d: kernel extent " + std::to_string(span) +
                         " larger than padded input " + std::to_string(in + 2 * pad));
  }
  return (in + 2 * pad - span) / stride + 1;
}

std::size_t deconv_out_extent(std::size_t in, std::size_t kernel, std::size_t stride,
                              std::size_t pad, std::size_t dilation, std::size_t output_pad) {
  if (output_pad >= std::max(stride, dilation)) {
    throw DimensionError("conv_transpose2d: output padding " + std::to_string(output_pad) +
                         " must be smaller than stride or dilation");
  }
  const std::size_t full = (in - 1) * stride + dilation * (kernel - 1) + output_pad + 1;
  if (in == 0 || full <= 2 * pad) {
    throw DimensionError("conv_transpose2d: padding " + std::to_string(pad) +
                         " leaves no output for input extent " + std::to_string(in));
  }
  return full - 2 * pad;
}

namespace {

// Dense 4-D activations N x C x T x F.
struct Dims {
  std::size_t n, c, t, f;
};

struct Kernel {
  std::size_t out_c, in_c, kt, kf;
};

// Output indices o in [lo, hi) whose input index o * stride + offset lands in [0, in_len).
struct Range {
  std::ptrdiff_t lo, hi;
};

Range valid_range(std::size_t out_len, std::size_t in_len, std::size_t stride,
                  std::ptrdiff_t offset) {
  const auto s = static_cast<std::ptrdiff_t>(stride);
  std::ptrdiff_t lo = offset >= 0 ? 0 : (-offset + s - 1) / s;
  const std::ptrdiff_t last_in = static_cast<std::ptrdiff_t>(in_len) - 1 - offset;
  std::ptrdiff_t hi = last_in < 0 ? 0 : last_in / s + 1;
  hi = std::min(hi, static_cast<std::ptrdiff_t>(out_len));
  return {lo, std::max(lo, hi)};
}

// col[(ci, a, b), (to, fo)] = x[ci, to * st + a * dt - pt, fo * sf + b * df - pf], zero
// outside the input. One sample at a time.
template <typename T>
void im2col(const T* x, Dims xd, Kernel k, Dims yd, const ConvGeometry& g, T* col) {
  const std::size_t plane = yd.t * yd.f;
  std::fill(col, col + k.in_c * k.kt * k.kf * plane, T(0));
  for (std::size_t ci = 0; ci < k.in_c; ++ci) {
    const T* xplane = x + ci * xd.t * xd.f;
    for (std::size_t a = 0; a < k.kt; ++a) {
      const auto off_t = static_cast<std::ptrdiff_t>(a * g.dilation_t) - static_cast<std::ptrdiff_t>(g.pad_t);
      const Range rt = valid_range(yd.t, xd.t, g.stride_t, off_t);
      for (std::size_t b = 0; b < k.kf; ++b) {
        const auto off_f = static_cast<std::ptrdiff_t>(b * g.dilation_f) - static_cast<std::ptrdiff_t>(g.pad_f);
        const Range rf = valid_range(yd.f, xd.f, g.stride_f, off_f);
        const auto sf = static_cast<std::ptrdiff_t>(g.stride_f);
        T* crow = col + ((ci * k.kt + a) * k.kf + b) * plane;
        for (std::ptrdiff_t to = rt.lo; to < rt.hi; ++to) {
          const std::ptrdiff_t ti = to * static_cast<std::ptrdiff_t>(g.stride_t) + off_t;
          const T* xrow = xplane + ti * static_cast<std::ptrdiff_t>(xd.f) + off_f;
          T* dst = crow + to * static_cast<std::ptrdiff_t>(yd.f);
          for (std::ptrdiff_t fo = rf.lo; fo < rf.hi; ++fo) dst[fo] = xrow[fo * sf];
        }
      }
    }
  }
}

// Adjoint of im2col: scatter-add col back onto x.
template <typename T>
void col2im(const T* col, Kernel k, Dims yd, const ConvGeometry& g, T* x, Dims xd) {
  const std::size_t plane = yd.t * yd.f;
  for (std::size_t ci = 0; ci < k.in_c; ++ci) {
    T* xplane = x + ci * xd.t * xd.f;
    for (std::size_t a = 0; a < k.kt; ++a) {
      const auto off_t = static_cast<std::ptrdiff_t>(a * g.dilation_t) - static_cast<std::ptrdiff_t>(g.pad_t);
      const Range rt = valid_range(yd.t, xd.t, g.stride_t, off_t);
      for (std::size_t b = 0; b < k.kf; ++b) {
        const auto off_f = static_cast<std::ptrdiff_t>(b * g.dilation_f) - static_cast<std::ptrdiff_t>(g.pad_f);
        const Range rf = valid_range(yd.f, xd.f, g.stride_f, off_f);
        const auto sf = static_cast<std::ptrdiff_t>(g.stride_f);
        const T* crow = col + ((ci * k.kt + a) * k.kf + b) * plane;
        for (std::ptrdiff_t to = rt.lo; to < rt.hi; ++to) {
          const std::ptrdiff_t ti = to * static_cast<std::ptrdiff_t>(g.stride_t) + off_t;
          T* xrow = xplane + ti * static_cast<std::ptrdiff_t>(xd.f) + off_f;
          const T* src = crow + to * static_cast<std::ptrdiff_t>(yd.f);
          for (std::ptrdiff_t fo = rf.lo; fo < rf.hi; ++fo) xrow[fo * sf] += src[fo];
        }
      }
    }
  }
}

// y[n] += W * im2col(x[n]), W viewed as out_c x (in_c * kt * kf).
template <typename T>
void conv_forward(const T* x, Dims xd, const T* w, Kernel k, T* y, Dims yd,
                  const ConvGeometry& g) {
  const std::size_t rows = k.in_c * k.kt * k.kf, plane = yd.t * yd.f;
  std::vector<T> col(rows * plane);
  for (std::size_t n = 0; n < xd.n; ++n) {
    im2col(x + n * xd.c * xd.t * xd.f, xd, k, yd, g, col.data());
    kernels::gemm_nn(k.out_c, plane, rows, w, col.data(), y + n * yd.c * plane);
  }
}

// dx += W^T applied to dy (the adjoint of conv_forward in x).
template <typename T>
void conv_backward_data(const T* dy, Dims yd, const T* w, Kernel k, T* dx, Dims xd,
                        const ConvGeometry& g) {
  const std::size_t rows = k.in_c * k.kt * k.kf, plane = yd.t * yd.f;
  std::vector<T> col(rows * plane);
  for (std::size_t n = 0; n < xd.n; ++n) {
    std::fill(col.begin(), col.end(), T(0));
    kernels::gemm_tn(rows, plane, k.out_c, w, dy + n * yd.c * plane, col.data());
    col2im(col.data(), k, yd, g, dx + n * xd.c * xd.t * xd.f, xd);
  }
}

// dw += dy[n] * im2col(x[n])^T.
template <typename T>
void conv_backward_weight(const T* x, Dims xd, const T* dy, Dims yd, T* dw, Kernel k,
                          const ConvGeometry& g) {
  const std::size_t rows = k.in_c * k.kt * k.kf, plane = yd.t * yd.f;
  std::vector<T> col(rows * plane);
  for (std::size_t n = 0; n < xd.n; ++n) {
    im2col(x + n * xd.c * xd.t * xd.f, xd, k, yd, g, col.data());
    kernels::gemm_nt(k.out_c, rows, plane, dy + n * yd.c * plane, col.data(), dw);
  }
}

template <typename T>
void add_bias(T* y, Dims yd, const T* bias) {
  for (std::size_t n = 0; n < yd.n; ++n) {
    for (std::size_t c = 0; c < yd.c; ++c) {
      T* plane = y + (n * yd.c + c) * yd.t * yd.f;
      std::fill(plane, plane + yd.t * yd.f, bias[c]);
    }
  }
}

template <typename T>
void accumulate_bias_grad(const T* dy, Dims yd, T* db) {
  for (std::size_t n = 0; n < yd.n; ++n) {
    for (std::size_t c = 0; c < yd.c; ++c) {
      const T* plane = dy + (n * yd.c + c) * yd.t * yd.f;
      T acc = 0;
      for (std::size_t i = 0; i < yd.t * yd.f; ++i) acc += plane[i];
      db[c] += acc;
    }
  }
}

template <typename T>
Dims activation_dims(const Tensor<T>& x, const char* op) {
  if (x.rank() == 3) return {1, x.dim(0), x.dim(1), x.dim(2)};
  if (x.rank() == 4) return {x.dim(0), x.dim(1), x.dim(2), x.dim(3)};
  throw DimensionError(std::string(op) + ": expected [N x] C x T x F input, got " +
                       to_string(x.shape()));
}

Shape shape_like(std::size_t input_rank, Dims d) {
  if (input_rank == 3) return {d.c, d.t, d.f};
  return {d.n, d.c, d.t, d.f};
}

}  // namespace

template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias,
                 const ConvGeometry& geom) {
  const Dims xd = activation_dims(x, "conv2d");
  if (weight.rank() != 4 || weight.dim(1) != xd.c) {
    throw DimensionError("conv2d: weight " + to_string(weight.shape()) +
                         " does not match input " + to_string(x.shape()));
  }
  const Kernel k{weight.dim(0), weight.dim(1), weight.dim(2), weight.dim(3)};
  if (bias.defined() && bias.size() != k.out_c) {
    throw DimensionError("conv2d: bias " + to_string(bias.shape()) + " for " +
                         std::to_string(k.out_c) + " output channels");
  }
  const Dims yd{xd.n, k.out_c, conv_out_extent(xd.t, k.kt, geom.stride_t, geom.pad_t, geom.dilation_t),
                conv_out_extent(xd.f, k.kf, geom.stride_f, geom.pad_f, geom.dilation_f)};
  Tensor<T> out(shape_like(x.rank(), yd));
  if (bias.defined()) add_bias(out.data().data(), yd, bias.data().data());
  conv_forward(x.data().data(), xd, weight.data().data(), k, out.data().data(), yd, geom);

  if (needs_grad<T>({&x, &weight, &bias})) {
    std::vector<std::shared_ptr<TensorImpl<T>>> inputs{x.impl(), weight.impl()};
    if (bias.defined()) inputs.push_back(bias.impl());
    record_op<T>("conv2d", inputs, out, [x, weight, bias, out, xd, yd, k, geom]() {
      const T* g = out.impl()->grad.data();
      if (x.requires_grad()) {
        conv_backward_data(g, yd, weight.data().data(), k, grad_buffer(*x.impl()).data(), xd, geom);
      }
      if (weight.requires_grad()) {
        conv_backward_weight(x.data().data(), xd, g, yd, grad_buffer(*weight.impl()).data(), k, geom);
      }
      if (bias.defined() && bias.requires_grad()) {
        accumulate_bias_grad(g, yd, grad_buffer(*bias.impl()).data());
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> conv_transpose2d(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias,
                           const ConvGeometry& geom) {
  const Dims xd = activation_dims(x, "conv_transpose2d");
  if (weight.rank() != 4 || weight.dim(0) != xd.c) {
    throw DimensionError("conv_transpose2d: weight " + to_string(weight.shape()) +
                         " does not match input " + to_string(x.shape()));
  }
  // The equivalent forward convolution maps the output back onto x, so its
  // kernel has x's channels as outputs.
  const Kernel k{weight.dim(0), weight.dim(1), weight.dim(2), weight.dim(3)};
  if (bias.defined() && bias.size() != k.in_c) {
    throw DimensionError("conv_transpose2d: bias " + to_string(bias.shape()) + " for " +
                         std::to_string(k.in_c) + " output channels");
  }
  const Dims yd{xd.n, k.in_c,
                deconv_out_extent(xd.t, k.kt, geom.stride_t, geom.pad_t, geom.dilation_t, geom.output_pad_t),
                deconv_out_extent(xd.f, k.kf, geom.stride_f, geom.pad_f, geom.dilation_f, geom.output_pad_f)};
  Tensor<T> out(shape_like(x.rank(), yd));
  if (bias.defined()) add_bias(out.data().data(), yd, bias.data().data());
  conv_backward_data(x.data().data(), xd, weight.data().data(), k, out.data().data(), yd, geom);

  if (needs_grad<T>({&x, &weight, &bias})) {
    std::vector<std::shared_ptr<TensorImpl<T>>> inputs{x.impl(), weight.impl()};
    if (bias.defined()) inputs.push_back(bias.impl());
    record_op<T>("conv_transpose2d", inputs, out, [x, weight, bias, out, xd, yd, k, geom]() {
      const T* g = out.impl()->grad.data();
      if (x.requires_grad()) {
        conv_forward(g, yd, weight.data().data(), k, grad_buffer(*x.impl()).data(), xd, geom);
      }
      if (weight.requires_grad()) {
        conv_backward_weight(g, yd, x.data().data(), xd, grad_buffer(*weight.impl()).data(), k, geom);
      }
      if (bias.defined() && bias.requires_grad()) {
        accumulate_bias_grad(g, yd, grad_buffer(*bias.impl()).data());
      }
    });
  }
  return out;
}

#define GLDNET_INSTANTIATE(T)                                                                  \
  template Tensor<T> conv2d(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,              \
                            const ConvGeometry&);                                              \
  template Tensor<T> conv_transpose2d(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,    \
                                      const ConvGeometry&);

GLDNET_INSTANTIATE(float)
GLDNET_INSTANTIATE(double)

}  // namespace gldnet

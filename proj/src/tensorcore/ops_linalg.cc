// Copyright 2026 The GLD-Net Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <algorithm>
#include <cmath>

#include "gldnet/ops.h"
#include "kernels.h"

namespace gldnet {

template <typename T>
Tensor<T> bmm(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.rank() != 3 || b.rank() != 3 || a.dim(0) != b.dim(0) || a.dim(2) != b.dim(1)) {
    throw DimensionError("bmm: cannot multiply " + to_string(a.shape()) + " by " +
                         to_string(b.shape()));
  }
  const std::size_t batch = a.dim(0), m = a.dim(1), k = a.dim(2), n = b.dim(2);
  Tensor<T> out(Shape{batch, m, n});
  for (std::size_t i = 0; i < batch; ++i) {
    kernels::gemm_nn(m, n, k, a.data().data() + i * m * k, b.data().data() + i * k * n,
                     out.data().data() + i * m * n);
  }
  if (needs_grad<T>({&a, &b})) {
    record_op<T>("bmm", {a.impl(), b.impl()}, out, [a, b, out, batch, m, k, n]() {
      const T* g = out.impl()->grad.data();
      if (a.requires_grad()) {
        T* ga = grad_buffer(*a.impl()).data();
        for (std::size_t i = 0; i < batch; ++i) {
          kernels::gemm_nt(m, k, n, g + i * m * n, b.data().data() + i * k * n, ga + i * m * k);
        }
      }
      if (b.requires_grad()) {
        T* gb = grad_buffer(*b.impl()).data();
        for (std::size_t i = 0; i < batch; ++i) {
          kernels::gemm_tn(k, n, m, a.data().data() + i * m * k, g + i * m * n, gb + i * k * n);
        }
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
    throw DimensionError("matmul: cannot multiply " + to_string(a.shape()) + " by " +
                         to_string(b.shape()));
  }
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  Tensor<T> out(Shape{m, n});
  kernels::gemm_nn(m, n, k, a.data().data(), b.data().data(), out.data().data());
  if (needs_grad<T>({&a, &b})) {
    record_op<T>("matmul", {a.impl(), b.impl()}, out, [a, b, out, m, k, n]() {
      const T* g = out.impl()->grad.data();
      if (a.requires_grad()) {
        kernels::gemm_nt(m, k, n, g, b.data().data(), grad_buffer(*a.impl()).data());
      }
      if (b.requires_grad()) {
        kernels::gemm_tn(k, n, m, a.data().data(), g, grad_buffer(*b.impl()).data());
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> softmax(const Tensor<T>& x, std::size_t axis) {
  if (axis >= x.rank()) {
    throw DimensionError("softmax: axis " + std::to_string(axis) + " out of range for " +
                         to_string(x.shape()));
  }
  std::size_t outer = 1, inner = 1;
  for (std::size_t d = 0; d < axis; ++d) outer *= x.dim(d);
  for (std::size_t d = axis + 1; d < x.rank(); ++d) inner *= x.dim(d);
  const std::size_t len = x.dim(axis);
  Tensor<T> out(x.shape());
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t i = 0; i < inner; ++i) {
      const std::size_t base = o * len * inner + i;
      T peak = x[base];
      for (std::size_t k = 1; k < len; ++k) peak = std::max(peak, x[base + k * inner]);
      if (!std::isfinite(peak)) {
        throw NumericError("softmax: non-finite input in tensor " + to_string(x.shape()));
      }
      T total = 0;
      for (std::size_t k = 0; k < len; ++k) {
        const T e = std::exp(x[base + k * inner] - peak);
        out[base + k * inner] = e;
        total += e;
      }
      for (std::size_t k = 0; k < len; ++k) out[base + k * inner] /= total;
    }
  }
  if (needs_grad<T>({&x})) {
    record_op<T>("softmax", {x.impl()}, out, [x, out, outer, inner, len]() {
      const auto& g = out.impl()->grad;
      const auto& y = out.impl()->data;
      auto& gx = grad_buffer(*x.impl());
      for (std::size_t o = 0; o < outer; ++o) {
        for (std::size_t i = 0; i < inner; ++i) {
          const std::size_t base = o * len * inner + i;
          T dot = 0;
          for (std::size_t k = 0; k < len; ++k) dot += g[base + k * inner] * y[base + k * inner];
          for (std::size_t k = 0; k < len; ++k) {
            const std::size_t j = base + k * inner;
            gx[j] += y[j] * (g[j] - dot);
          }
        }
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias) {
  if (x.rank() < 1 || weight.rank() != 2 || x.dim(x.rank() - 1) != weight.dim(1)) {
    throw DimensionError("linear: input " + to_string(x.shape()) + " incompatible with weight " +
                         to_string(weight.shape()));
  }
  const std::size_t in = weight.dim(1), out_dim = weight.dim(0);
  if (bias.defined() && bias.size() != out_dim) {
    throw DimensionError("linear: bias " + to_string(bias.shape()) + " for " +
                         std::to_string(out_dim) + " outputs");
  }
  const std::size_t rows = x.size() / in;
  Shape shape = x.shape();
  shape.back() = out_dim;
  Tensor<T> out(shape);
  if (bias.defined()) {
    for (std::size_t r = 0; r < rows; ++r) {
      std::copy(bias.data().begin(), bias.data().end(), out.data().begin() + static_cast<std::ptrdiff_t>(r * out_dim));
    }
  }
  kernels::gemm_nt(rows, out_dim, in, x.data().data(), weight.data().data(), out.data().data());
  if (needs_grad<T>({&x, &weight, &bias})) {
    std::vector<std::shared_ptr<TensorImpl<T>>> inputs{x.impl(), weight.impl()};
    if (bias.defined()) inputs.push_back(bias.impl());
    record_op<T>("linear", inputs, out, [x, weight, bias, out, rows, in, out_dim]() {
      const T* g = out.impl()->grad.data();
      if (x.requires_grad()) {
        kernels::gemm_nn(rows, in, out_dim, g, weight.data().data(), grad_buffer(*x.impl()).data());
      }
      if (weight.requires_grad()) {
        kernels::gemm_tn(out_dim, in, rows, g, x.data().data(), grad_buffer(*weight.impl()).data());
      }
      if (bias.defined() && bias.requires_grad()) {
        auto& gb = grad_buffer(*bias.impl());
        for (std::size_t r = 0; r < rows; ++r) {
          for (std::size_t o = 0; o < out_dim; ++o) gb[o] += g[r * out_dim + o];
        }
      }
    });
  }
  return out;
}

#define GLDNET_INSTANTIATE(T)                                                  \
  template Tensor<T> bmm(const Tensor<T>&, const Tensor<T>&);                  \
  template Tensor<T> matmul(const Tensor<T>&, const Tensor<T>&);               \
  template Tensor<T> softmax(const Tensor<T>&, std::size_t);                   \
  template Tensor<T> linear(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);

GLDNET_INSTANTIATE(float)
GLDNET_INSTANTIATE(double)

}  // namespace gldnet

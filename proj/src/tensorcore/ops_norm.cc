// Copyright 2026 The GLD-Net Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <cmath>

#include "gldnet/ops.h"

namespace gldnet {

template <typename T>
BatchNormStats<T> BatchNormStats<T>::make(std::size_t channels) {
  BatchNormStats stats;
  stats.running_mean = Tensor<T>(Shape{channels}, T(0));
  stats.running_var = Tensor<T>(Shape{channels}, T(1));
  return stats;
}

template <typename T>
Tensor<T> batchnorm2d(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                      BatchNormStats<T>& stats, Mode mode) {
  if (x.rank() != 3 && x.rank() != 4) {
    throw DimensionError("batchnorm2d: expected [N x] C x T x F input, got " +
                         to_string(x.shape()));
  }
  const bool batched = x.rank() == 4;
  const std::size_t n = batched ? x.dim(0) : 1;
  const std::size_t c = x.dim(batched ? 1 : 0);
  const std::size_t plane = x.dim(batched ? 2 : 1) * x.dim(batched ? 3 : 2);
  if (gamma.size() != c || beta.size() != c || stats.running_mean.size() != c ||
      stats.running_var.size() != c) {
    throw DimensionError("batchnorm2d: per-channel parameters must have length " +
                         std::to_string(c));
  }
  const std::size_t count = n * plane;
  if (count == 0) throw NumericError("batchnorm2d: channel with zero elements");

  std::vector<T> mu(c), inv_std(c);
  if (mode == Mode::kTrain) {
    for (std::size_t ch = 0; ch < c; ++ch) {
      T s = 0;
      for (std::size_t b = 0; b < n; ++b) {
        const T* p = x.data().data() + (b * c + ch) * plane;
        for (std::size_t i = 0; i < plane; ++i) s += p[i];
      }
      const T m = s / static_cast<T>(count);
      T v = 0;
      for (std::size_t b = 0; b < n; ++b) {
        const T* p = x.data().data() + (b * c + ch) * plane;
        for (std::size_t i = 0; i < plane; ++i) v += (p[i] - m) * (p[i] - m);
      }
      v /= static_cast<T>(count);
      mu[ch] = m;
      inv_std[ch] = T(1) / std::sqrt(v + stats.eps);
      const T unbiased = count > 1 ? v * static_cast<T>(count) / static_cast<T>(count - 1) : v;
      stats.running_mean[ch] = stats.momentum * stats.running_mean[ch] + (T(1) - stats.momentum) * m;
      stats.running_var[ch] = stats.momentum * stats.running_var[ch] + (T(1) - stats.momentum) * unbiased;
    }
  } else {
    for (std::size_t ch = 0; ch < c; ++ch) {
      mu[ch] = stats.running_mean[ch];
      inv_std[ch] = T(1) / std::sqrt(stats.running_var[ch] + stats.eps);
    }
  }

  Tensor<T> out(x.shape());
  std::vector<T> xhat(x.size());
  for (std::size_t b = 0; b < n; ++b) {
    for (std::size_t ch = 0; ch < c; ++ch) {
      const std::size_t base = (b * c + ch) * plane;
      for (std::size_t i = 0; i < plane; ++i) {
        const T h = (x[base + i] - mu[ch]) * inv_std[ch];
        xhat[base + i] = h;
        out[base + i] = gamma[ch] * h + beta[ch];
      }
    }
  }

  if (needs_grad<T>({&x, &gamma, &beta})) {
    const bool train = mode == Mode::kTrain;
    record_op<T>("batchnorm2d", {x.impl(), gamma.impl(), beta.impl()}, out,
                 [x, gamma, beta, out, xhat = std::move(xhat), inv_std = std::move(inv_std), n, c,
                  plane, count, train]() {
                   const auto& g = out.impl()->grad;
                   std::vector<T> sum_g(c, 0), sum_gh(c, 0);
                   for (std::size_t b = 0; b < n; ++b) {
                     for (std::size_t ch = 0; ch < c; ++ch) {
                       const std::size_t base = (b * c + ch) * plane;
                       for (std::size_t i = 0; i < plane; ++i) {
                         sum_g[ch] += g[base + i];
                         sum_gh[ch] += g[base + i] * xhat[base + i];
                       }
                     }
                   }
                   if (gamma.requires_grad()) {
                     auto& gg = grad_buffer(*gamma.impl());
                     for (std::size_t ch = 0; ch < c; ++ch) gg[ch] += sum_gh[ch];
                   }
                   if (beta.requires_grad()) {
                     auto& gb = grad_buffer(*beta.impl());
                     for (std::size_t ch = 0; ch < c; ++ch) gb[ch] += sum_g[ch];
                   }
                   if (!x.requires_grad()) return;
                   auto& gx = grad_buffer(*x.impl());
                   const T inv_count = T(1) / static_cast<T>(count);
                   for (std::size_t b = 0; b < n; ++b) {
                     for (std::size_t ch = 0; ch < c; ++ch) {
                       const std::size_t base = (b * c + ch) * plane;
                       const T k = gamma[ch] * inv_std[ch];
                       if (train) {
                         // Batch statistics depend on x: project out the mean
                         // and the xhat direction.
                         const T mg = sum_g[ch] * inv_count;
                         const T mgh = sum_gh[ch] * inv_count;
                         for (std::size_t i = 0; i < plane; ++i) {
                           gx[base + i] += k * (g[base + i] - mg - xhat[base + i] * mgh);
                         }
                       } else {
                         for (std::size_t i = 0; i < plane; ++i) gx[base + i] += k * g[base + i];
                       }
                     }
                   }
                 });
  }
  return out;
}

template struct BatchNormStats<float>;
template struct BatchNormStats<double>;
template Tensor<float> batchnorm2d(const Tensor<float>&, const Tensor<float>&,
                                   const Tensor<float>&, BatchNormStats<float>&, Mode);
template Tensor<double> batchnorm2d(const Tensor<double>&, const Tensor<double>&,
                                    const Tensor<double>&, BatchNormStats<double>&, Mode);

}  // namespace gldnet

// Copyright 2026 The GLD-Net Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <cmath>

#include "gldnet/ops.h"
#include "kernels.h"

namespace gldnet {

namespace {

template <typename T>
T logistic(T x) {
  if (x >= T(0)) return T(1) / (T(1) + std::exp(-x));
  const T e = std::exp(x);
  return e / (T(1) + e);
}

}  // namespace

template <typename T>
Tensor<T> lstm(const Tensor<T>& x, const Tensor<T>& w_ih, const Tensor<T>& w_hh,
               const Tensor<T>& bias) {
  if (x.rank() != 2 && x.rank() != 3) {
    throw DimensionError("lstm: expected [N x] T x D input, got " + to_string(x.shape()));
  }
  const bool batched = x.rank() == 3;
  const std::size_t n = batched ? x.dim(0) : 1;
  const std::size_t steps = x.dim(batched ? 1 : 0);
  const std::size_t d = x.dim(batched ? 2 : 1);
  if (w_ih.rank() != 2 || w_ih.dim(0) % 4 != 0 || w_ih.dim(1) != d) {
    throw DimensionError("lstm: input width " + std::to_string(d) + " does not match w_ih " +
                         to_string(w_ih.shape()));
  }
  const std::size_t h = w_ih.dim(0) / 4;
  if (w_hh.shape() != Shape{4 * h, h} || bias.size() != 4 * h) {
    throw DimensionError("lstm: w_hh " + to_string(w_hh.shape()) + " / bias " +
                         to_string(bias.shape()) + " inconsistent with hidden size " +
                         std::to_string(h));
  }
  const std::size_t rows = n * steps;
  const std::size_t g4 = 4 * h;

  // gates[r] holds activated i, f, g, o; cell[r] holds c_t; tanh_cell[r] holds tanh(c_t).
  std::vector<T> gates(rows * g4, T(0));
  std::vector<T> cell(rows * h), tanh_cell(rows * h);
  kernels::gemm_nt(rows, g4, d, x.data().data(), w_ih.data().data(), gates.data());

  Tensor<T> out(batched ? Shape{n, steps, h} : Shape{steps, h});
  T* hs = out.data().data();
  for (std::size_t b = 0; b < n; ++b) {
    for (std::size_t t = 0; t < steps; ++t) {
      const std::size_t r = b * steps + t;
      T* a = gates.data() + r * g4;
      for (std::size_t j = 0; j < g4; ++j) a[j] += bias[j];
      if (t > 0) kernels::gemm_nt(1, g4, h, hs + (r - 1) * h, w_hh.data().data(), a);
      for (std::size_t j = 0; j < h; ++j) {
        const T ig = logistic(a[j]);
        const T fg = logistic(a[h + j]);
        const T gg = std::tanh(a[2 * h + j]);
        const T og = logistic(a[3 * h + j]);
        a[j] = ig;
        a[h + j] = fg;
        a[2 * h + j] = gg;
        a[3 * h + j] = og;
        const T prev = t > 0 ? cell[(r - 1) * h + j] : T(0);
        const T c = fg * prev + ig * gg;
        cell[r * h + j] = c;
        tanh_cell[r * h + j] = std::tanh(c);
        hs[r * h + j] = og * tanh_cell[r * h + j];
      }
    }
  }

  if (needs_grad<T>({&x, &w_ih, &w_hh, &bias})) {
    record_op<T>("lstm", {x.impl(), w_ih.impl(), w_hh.impl(), bias.impl()}, out,
                 [x, w_ih, w_hh, bias, out, gates = std::move(gates), cell = std::move(cell),
                  tanh_cell = std::move(tanh_cell), n, steps, d, h, rows, g4]() {
                   const T* dout = out.impl()->grad.data();
                   const T* hs = out.data().data();
                   std::vector<T> da(rows * g4, T(0));
                   std::vector<T> dh_next(h), dc_next(h);
                   std::vector<T> whh_grad(g4 * h, T(0));
                   for (std::size_t b = 0; b < n; ++b) {
                     std::fill(dh_next.begin(), dh_next.end(), T(0));
                     std::fill(dc_next.begin(), dc_next.end(), T(0));
                     for (std::size_t t = steps; t-- > 0;) {
                       const std::size_t r = b * steps + t;
                       const T* a = gates.data() + r * g4;
                       T* dar = da.data() + r * g4;
                       for (std::size_t j = 0; j < h; ++j) {
                         const T ig = a[j], fg = a[h + j], gg = a[2 * h + j], og = a[3 * h + j];
                         const T tc = tanh_cell[r * h + j];
                         const T prev = t > 0 ? cell[(r - 1) * h + j] : T(0);
                         const T dh = dout[r * h + j] + dh_next[j];
                         const T dc = dh * og * (T(1) - tc * tc) + dc_next[j];
                         dar[j] = dc * gg * ig * (T(1) - ig);
                         dar[h + j] = dc * prev * fg * (T(1) - fg);
                         dar[2 * h + j] = dc * ig * (T(1) - gg * gg);
                         dar[3 * h + j] = dh * tc * og * (T(1) - og);
                         dc_next[j] = dc * fg;
                       }
                       std::fill(dh_next.begin(), dh_next.end(), T(0));
                       if (t > 0) {
                         // dh_{t-1} = W_hh^T da ; dW_hh += da h_{t-1}^T
                         kernels::gemm_nn(1, h, g4, dar, w_hh.data().data(), dh_next.data());
                         kernels::gemm_tn(g4, h, 1, dar, hs + (r - 1) * h, whh_grad.data());
                       }
                     }
                   }
                   if (x.requires_grad()) {
                     kernels::gemm_nn(rows, d, g4, da.data(), w_ih.data().data(),
                                      grad_buffer(*x.impl()).data());
                   }
                   if (w_ih.requires_grad()) {
                     kernels::gemm_tn(g4, d, rows, da.data(), x.data().data(),
                                      grad_buffer(*w_ih.impl()).data());
                   }
                   if (w_hh.requires_grad()) {
                     auto& gw = grad_buffer(*w_hh.impl());
                     for (std::size_t i = 0; i < gw.size(); ++i) gw[i] += whh_grad[i];
                   }
                   if (bias.requires_grad()) {
                     auto& gb = grad_buffer(*bias.impl());
                     for (std::size_t r = 0; r < rows; ++r) {
                       for (std::size_t j = 0; j < g4; ++j) gb[j] += da[r * g4 + j];
                     }
                   }
                 });
  }
  return out;
}

template Tensor<float> lstm(const Tensor<float>&, const Tensor<float>&, const Tensor<float>&,
                            const Tensor<float>&);
template Tensor<double> lstm(const Tensor<double>&, const Tensor<double>&, const Tensor<double>&,
                             const Tensor<double>&);

}  // namespace gldnet

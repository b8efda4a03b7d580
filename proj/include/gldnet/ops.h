// Copyright 2026 The GLD-Net Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstddef>
#include <vector>

#include "gldnet/graph.h"
#include "gldnet/tensor.h"

// Differentiable tensor operations. Each op computes its result eagerly and,
// when a Graph is active and an input requires gradients, records a closure
// that propagates the output gradient back to its inputs.
namespace gldnet {

enum class Mode { kTrain, kEval };

// ---- elementwise -----------------------------------------------------------

template <typename T> Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);
// scale * x + shift with constant coefficients.
template <typename T> Tensor<T> affine(const Tensor<T>& x, T scale, T shift);
// alpha * x for a learnable one-element alpha.
template <typename T> Tensor<T> scale_by(const Tensor<T>& x, const Tensor<T>& alpha);
// out[b, m, :] = x[b, m, :] * s[b, m]; x is B x M x L, s is B x M.
template <typename T> Tensor<T> scale_rows(const Tensor<T>& x, const Tensor<T>& s);

template <typename T> Tensor<T> sigmoid(const Tensor<T>& x);
template <typename T> Tensor<T> tanh(const Tensor<T>& x);
template <typename T> Tensor<T> elu(const Tensor<T>& x);

enum class Pointwise { kElu, kSigmoid, kTanh };
template <typename T> Tensor<T> pointwise(const Tensor<T>& x, Pointwise kind);

// ---- reductions and losses ---------------------------------------------------

template <typename T> Tensor<T> sum(const Tensor<T>& x);
template <typename T> Tensor<T> mean(const Tensor<T>& x);
// Removes `axis` by summation.
template <typename T> Tensor<T> sum_axis(const Tensor<T>& x, std::size_t axis);
// Mean of squared differences over every element.
template <typename T> Tensor<T> mse_loss(const Tensor<T>& pred, const Tensor<T>& target);

// ---- layout ------------------------------------------------------------------

template <typename T> Tensor<T> reshape(const Tensor<T>& x, Shape shape);
template <typename T> Tensor<T> permute(const Tensor<T>& x, const std::vector<std::size_t>& order);
template <typename T>
Tensor<T> concat(const std::vector<Tensor<T>>& parts, std::size_t axis);
// Slice [start, start + length) along `axis`.
template <typename T>
Tensor<T> narrow(const Tensor<T>& x, std::size_t axis, std::size_t start, std::size_t length);

// ---- linear algebra ----------------------------------------------------------

// a: M x K, b: K x N.
template <typename T> Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b);
// Batched: a: B x M x K, b: B x K x N.
template <typename T> Tensor<T> bmm(const Tensor<T>& a, const Tensor<T>& b);
// Max-subtracted softmax along `axis`.
template <typename T> Tensor<T> softmax(const Tensor<T>& x, std::size_t axis);
// x: ... x D, weight: O x D, bias: O (may be undefined) -> ... x O.
template <typename T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias);

// ---- convolution -------------------------------------------------------------

struct ConvGeometry {
  std::size_t stride_t = 1, stride_f = 1;
  std::size_t pad_t = 0, pad_f = 0;
  std::size_t dilation_t = 1, dilation_f = 1;
  std::size_t output_pad_t = 0, output_pad_f = 0;  // transposed convolution only
};

// Cross-correlation. x: [N x] C_in x T x F, weight: C_out x C_in x kT x kF,
// bias: C_out or undefined. Output rank follows the input rank.
template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias,
                 const ConvGeometry& geom);

// Adjoint of conv2d with the same geometry. weight: C_in x C_out x kT x kF.
template <typename T>
Tensor<T> conv_transpose2d(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias,
                           const ConvGeometry& geom);

// Spatial output extent of conv2d / conv_transpose2d along one axis.
std::size_t conv_out_extent(std::size_t in, std::size_t kernel, std::size_t stride,
                            std::size_t pad, std::size_t dilation);
std::size_t deconv_out_extent(std::size_t in, std::size_t kernel, std::size_t stride,
                              std::size_t pad, std::size_t dilation, std::size_t output_pad);

// ---- normalization -----------------------------------------------------------

template <typename T>
struct BatchNormStats {
  Tensor<T> running_mean;
  Tensor<T> running_var;
  T momentum = T(0.9);  // running = momentum * running + (1 - momentum) * batch
  T eps = T(1e-5);

  static BatchNormStats make(std::size_t channels);
};

// Per-channel normalization over N, T and F of an [N x] C x T x F input.
// Train mode uses batch statistics and updates `stats`; eval mode reads them.
template <typename T>
Tensor<T> batchnorm2d(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                      BatchNormStats<T>& stats, Mode mode);

// ---- recurrent ---------------------------------------------------------------

// One LSTM layer over x: N x T x D (or T x D) with zero initial state.
// Gate order in the 4H rows: input, forget, candidate, output.
// w_ih: 4H x D, w_hh: 4H x H, bias: 4H.
template <typename T>
Tensor<T> lstm(const Tensor<T>& x, const Tensor<T>& w_ih, const Tensor<T>& w_hh,
               const Tensor<T>& bias);

// ---- framing -----------------------------------------------------------------

// frames: [N x] T x L -> [N x] ((T - 1) * hop + L), summing overlapping frames.
template <typename T> Tensor<T> overlap_add(const Tensor<T>& frames, std::size_t hop);

}  // namespace gldnet

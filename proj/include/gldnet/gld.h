// Copyright 2026 The GLD-Net Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <string>
#include <type_traits>

#include "gldnet/blocks.h"

namespace gldnet {

enum class BlockVariant { kSpeech, kInterference };

struct GldOptions {
  // Aggregate as alpha * sum_i x_ji * V_j (and likewise for L), which
  // collapses to alpha * V_j. Off: alpha * sum_i x_ji * V_i.
  bool literal_aggregation = false;
  // Speech gate as R * P (on) or P * E (off).
  bool literal_speech_mask = true;
  // Divide attention logits by sqrt(T * F).
  bool attention_scale = true;
};

// Intermediate values of one forward pass, for inspection.
template <typename T>
struct GldTrace {
  Tensor<T> k, v, e;
  Tensor<T> x;  // N x C x C global attention map
  Tensor<T> g;
  Tensor<T> r, p, q;
  Tensor<T> y;  // N x C x C local attention map
  Tensor<T> l;
};

template <typename T>
struct GldBlock {
  BlockVariant variant = BlockVariant::kSpeech;
  GldOptions options;
  ConvBlock<T> k_conv, v_conv, e_conv;
  ConvBlock<T> w_g, w_x;  // conv blocks
  ConvBlock<T> w_f;       // deconv block
  ConvBlock<T> output;    // deconv block
  Tensor<T> alpha;        // scalar, zero at init
  Tensor<T> beta;         // scalar, zero at init

  static GldBlock make(BlockVariant variant, std::size_t channels, std::size_t out_channels,
                       const GldOptions& options, Rng& rng);

  // x: [N x] C x T x F.
  Tensor<T> forward(const Tensor<T>& x, Mode mode, GldTrace<T>* trace = nullptr);

  void collect(const std::string& prefix, ParameterList<T>& params) const;
  void collect_buffers(const std::string& prefix, ParameterList<T>& buffers) const;
};

// Channel attention over flattened T*F descriptors. k, v: N x C x T x F.
// Returns G (same shape as v); writes the N x C x C map to *attention when given.
template <typename T>
using TensorOut = std::type_identity_t<Tensor<T>>*;  // optional out-parameter, not deduced

template <typename T>
Tensor<T> global_dependency(const Tensor<T>& k, const Tensor<T>& v, const Tensor<T>& alpha,
                            const GldOptions& options, TensorOut<T> attention = nullptr);

// R = sigmoid(W_g E + W_x K); P = sigmoid(W_f R).
template <typename T>
Tensor<T> local_attention(const Tensor<T>& e, const Tensor<T>& k, ConvBlock<T>& w_g,
                          ConvBlock<T>& w_x, ConvBlock<T>& w_f, Mode mode,
                          TensorOut<T> r_out = nullptr);

template <typename T>
Tensor<T> gated_feature(const Tensor<T>& e, const Tensor<T>& r, const Tensor<T>& p,
                        BlockVariant variant, const GldOptions& options);

template <typename T>
Tensor<T> local_dependency(const Tensor<T>& q, const Tensor<T>& g, const Tensor<T>& beta,
                           const GldOptions& options, TensorOut<T> attention = nullptr);

}  // namespace gldnet

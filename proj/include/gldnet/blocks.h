// Copyright 2026 The GLD-Net Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "gldnet/ops.h"
#include "gldnet/parameters.h"

namespace gldnet {

using Rng = std::mt19937_64;

// Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)].
template <typename T>
Tensor<T> init_uniform(Shape shape, std::size_t fan_in, Rng& rng);

// Padding 1, stride 1 on a 3x3 kernel keeps T and F.
ConvGeometry same_geometry();
// Halves F (stride 2 along frequency); time is untouched.
ConvGeometry downsample_geometry();
// Inverse of downsample_geometry: doubles F.
ConvGeometry upsample_geometry();

enum class BlockKind { kConv, kDeconv };

// conv (or transposed conv) -> batchnorm -> ELU. With `plain` set the block
// is the bare convolution.
template <typename T>
struct ConvBlock {
  BlockKind kind = BlockKind::kConv;
  ConvGeometry geom;
  bool plain = false;
  Tensor<T> weight;
  Tensor<T> bias;
  Tensor<T> gamma;
  Tensor<T> beta;
  BatchNormStats<T> stats;

  static ConvBlock make(BlockKind kind, std::size_t in_ch, std::size_t out_ch,
                        const ConvGeometry& geom, Rng& rng, bool plain = false);

  std::size_t in_channels() const;
  std::size_t out_channels() const;

  Tensor<T> forward(const Tensor<T>& x, Mode mode);

  void collect(const std::string& prefix, ParameterList<T>& params) const;
  // Running statistics; not optimized but checkpointed.
  void collect_buffers(const std::string& prefix, ParameterList<T>& buffers) const;
};

}  // namespace gldnet

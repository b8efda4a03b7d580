// Copyright 2026 The GLD-Net Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "gldnet/blocks.h"

#include <cmath>

namespace gldnet {

template <typename T>
Tensor<T> init_uniform(Shape shape, std::size_t fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  Tensor<T> t(std::move(shape));
  for (auto& v : t.data()) v = static_cast<T>(dist(rng));
  return t.set_requires_grad(true);
}

ConvGeometry same_geometry() {
  ConvGeometry g;
  g.pad_t = 1;
  g.pad_f = 1;
  return g;
}

ConvGeometry downsample_geometry() {
  ConvGeometry g = same_geometry();
  g.stride_f = 2;
  return g;
}

ConvGeometry upsample_geometry() {
  ConvGeometry g = downsample_geometry();
  g.output_pad_f = 1;
  return g;
}

template <typename T>
ConvBlock<T> ConvBlock<T>::make(BlockKind kind, std::size_t in_ch, std::size_t out_ch,
                                const ConvGeometry& geom, Rng& rng, bool plain) {
  ConvBlock b;
  b.kind = kind;
  b.geom = geom;
  b.plain = plain;
  const std::size_t k = 3;
  if (kind == BlockKind::kConv) {
    b.weight = init_uniform<T>(Shape{out_ch, in_ch, k, k}, in_ch * k * k, rng);
    b.bias = init_uniform<T>(Shape{out_ch}, in_ch * k * k, rng);
  } else {
    b.weight = init_uniform<T>(Shape{in_ch, out_ch, k, k}, out_ch * k * k, rng);
    b.bias = init_uniform<T>(Shape{out_ch}, out_ch * k * k, rng);
  }
  if (!plain) {
    b.gamma = Tensor<T>(Shape{out_ch}, T(1)).set_requires_grad(true);
    b.beta = Tensor<T>(Shape{out_ch}, T(0)).set_requires_grad(true);
    b.stats = BatchNormStats<T>::make(out_ch);
  }
  return b;
}

template <typename T>
std::size_t ConvBlock<T>::in_channels() const {
  return kind == BlockKind::kConv ? weight.dim(1) : weight.dim(0);
}

template <typename T>
std::size_t ConvBlock<T>::out_channels() const {
  return kind == BlockKind::kConv ? weight.dim(0) : weight.dim(1);
}

template <typename T>
Tensor<T> ConvBlock<T>::forward(const Tensor<T>& x, Mode mode) {
  auto y = kind == BlockKind::kConv ? conv2d(x, weight, bias, geom)
                                    : conv_transpose2d(x, weight, bias, geom);
  if (plain) return y;
  return elu(batchnorm2d(y, gamma, beta, stats, mode));
}

template <typename T>
void ConvBlock<T>::collect(const std::string& prefix, ParameterList<T>& params) const {
  params.push_back({prefix + ".weight", weight});
  params.push_back({prefix + ".bias", bias});
  if (!plain) {
    params.push_back({prefix + ".gamma", gamma});
    params.push_back({prefix + ".beta", beta});
  }
}

template <typename T>
void ConvBlock<T>::collect_buffers(const std::string& prefix, ParameterList<T>& buffers) const {
  if (plain) return;
  buffers.push_back({prefix + ".running_mean", stats.running_mean});
  buffers.push_back({prefix + ".running_var", stats.running_var});
}

template Tensor<float> init_uniform(Shape, std::size_t, Rng&);
template Tensor<double> init_uniform(Shape, std::size_t, Rng&);
template struct ConvBlock<float>;
template struct ConvBlock<double>;

}  // namespace gldnet

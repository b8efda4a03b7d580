// Copyright 2026 The GLD-Net Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <cmath>

#include "gldnet/error.h"
#include "gldnet/gld.h"

namespace gldnet {

namespace {

template <typename T>
Tensor<T> as_batched(const Tensor<T>& x) {
  if (x.rank() == 4) return x;
  if (x.rank() == 3) return reshape(x, Shape{1, x.dim(0), x.dim(1), x.dim(2)});
  throw DimensionError("gld: expected [N x] C x T x F feature, got " + to_string(x.shape()));
}

// Shared by both attention stages: logits[j, i] = <a_i, b_j>, softmax over i,
// then aggregate b. Inputs are N x C x T x F.
template <typename T>
Tensor<T> channel_attention(const Tensor<T>& a, const Tensor<T>& b, const Tensor<T>& weight,
                            const GldOptions& options, Tensor<T>* attention, const char* what) {
  if (a.shape() != b.shape() || a.rank() != 4) {
    throw DimensionError(std::string(what) + ": operands " + to_string(a.shape()) + " and " +
                         to_string(b.shape()) + " must share an N x C x T x F shape");
  }
  if (weight.size() != 1) throw DimensionError(std::string(what) + ": scale must be a scalar");
  const std::size_t n = a.dim(0), c = a.dim(1), tf = a.dim(2) * a.dim(3);
  auto af = reshape(a, Shape{n, c, tf});
  auto bf = reshape(b, Shape{n, c, tf});
  auto logits = bmm(bf, permute(af, {0, 2, 1}));  // [j, i] = <b_j, a_i>
  if (options.attention_scale) logits = affine(logits, T(1 / std::sqrt(static_cast<double>(tf))), T(0));
  auto map = softmax(logits, 2);
  if (attention) *attention = map;
  Tensor<T> agg = options.literal_aggregation ? scale_rows(bf, sum_axis(map, 2)) : bmm(map, bf);
  return reshape(scale_by(agg, weight), a.shape());
}

}  // namespace

template <typename T>
Tensor<T> global_dependency(const Tensor<T>& k, const Tensor<T>& v, const Tensor<T>& alpha,
                            const GldOptions& options, TensorOut<T> attention) {
  return channel_attention(k, v, alpha, options, attention, "global_dependency");
}

template <typename T>
Tensor<T> local_attention(const Tensor<T>& e, const Tensor<T>& k, ConvBlock<T>& w_g,
                          ConvBlock<T>& w_x, ConvBlock<T>& w_f, Mode mode, TensorOut<T> r_out) {
  if (e.shape() != k.shape()) {
    throw DimensionError("local_attention: E " + to_string(e.shape()) + " and K " +
                         to_string(k.shape()) + " differ");
  }
  auto r = sigmoid(add(w_g.forward(e, mode), w_x.forward(k, mode)));
  if (r_out) *r_out = r;
  return sigmoid(w_f.forward(r, mode));
}

template <typename T>
Tensor<T> gated_feature(const Tensor<T>& e, const Tensor<T>& r, const Tensor<T>& p,
                        BlockVariant variant, const GldOptions& options) {
  if (variant == BlockVariant::kInterference) return mul(affine(p, T(-1), T(1)), e);
  return mul(options.literal_speech_mask ? r : e, p);
}

template <typename T>
Tensor<T> local_dependency(const Tensor<T>& q, const Tensor<T>& g, const Tensor<T>& beta,
                           const GldOptions& options, TensorOut<T> attention) {
  return channel_attention(q, g, beta, options, attention, "local_dependency");
}

template <typename T>
GldBlock<T> GldBlock<T>::make(BlockVariant variant, std::size_t channels,
                              std::size_t out_channels, const GldOptions& options, Rng& rng) {
  GldBlock b;
  b.variant = variant;
  b.options = options;
  const auto same = same_geometry();
  b.k_conv = ConvBlock<T>::make(BlockKind::kConv, channels, channels, same, rng);
  b.v_conv = ConvBlock<T>::make(BlockKind::kConv, channels, channels, same, rng);
  b.e_conv = ConvBlock<T>::make(BlockKind::kConv, channels, channels, same, rng);
  b.w_g = ConvBlock<T>::make(BlockKind::kConv, channels, channels, same, rng);
  b.w_x = ConvBlock<T>::make(BlockKind::kConv, channels, channels, same, rng);
  b.w_f = ConvBlock<T>::make(BlockKind::kDeconv, channels, channels, same, rng);
  b.output = ConvBlock<T>::make(BlockKind::kDeconv, channels, out_channels, same, rng);
  b.alpha = Tensor<T>::scalar(T(0)).set_requires_grad(true);
  b.beta = Tensor<T>::scalar(T(0)).set_requires_grad(true);
  return b;
}

template <typename T>
Tensor<T> GldBlock<T>::forward(const Tensor<T>& input, Mode mode, GldTrace<T>* trace) {
  const bool batched = input.rank() == 4;
  auto x = as_batched(input);
  auto k = k_conv.forward(x, mode);
  auto v = v_conv.forward(x, mode);
  auto e = e_conv.forward(x, mode);
  Tensor<T> x_map, y_map, r;
  auto g = global_dependency(k, v, alpha, options, &x_map);
  auto p = local_attention(e, k, w_g, w_x, w_f, mode, &r);
  auto q = gated_feature(e, r, p, variant, options);
  auto l = local_dependency(q, g, beta, options, &y_map);
  auto out = output.forward(l, mode);
  if (trace) *trace = GldTrace<T>{k, v, e, x_map, g, r, p, q, y_map, l};
  if (!batched) out = reshape(out, Shape{out.dim(1), out.dim(2), out.dim(3)});
  return out;
}

template <typename T>
void GldBlock<T>::collect(const std::string& prefix, ParameterList<T>& params) const {
  k_conv.collect(prefix + ".k", params);
  v_conv.collect(prefix + ".v", params);
  e_conv.collect(prefix + ".e", params);
  w_g.collect(prefix + ".w_g", params);
  w_x.collect(prefix + ".w_x", params);
  w_f.collect(prefix + ".w_f", params);
  output.collect(prefix + ".out", params);
  params.push_back({prefix + ".alpha", alpha});
  params.push_back({prefix + ".beta", beta});
}

template <typename T>
void GldBlock<T>::collect_buffers(const std::string& prefix, ParameterList<T>& buffers) const {
  k_conv.collect_buffers(prefix + ".k", buffers);
  v_conv.collect_buffers(prefix + ".v", buffers);
  e_conv.collect_buffers(prefix + ".e", buffers);
  w_g.collect_buffers(prefix + ".w_g", buffers);
  w_x.collect_buffers(prefix + ".w_x", buffers);
  w_f.collect_buffers(prefix + ".w_f", buffers);
  output.collect_buffers(prefix + ".out", buffers);
}

#define GLDNET_INSTANTIATE(T)                                                                 \
  template struct GldBlock<T>;                                                                \
  template Tensor<T> global_dependency(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,  \
                                       const GldOptions&, TensorOut<T>);                        \
  template Tensor<T> local_attention(const Tensor<T>&, const Tensor<T>&, ConvBlock<T>&,       \
                                     ConvBlock<T>&, ConvBlock<T>&, Mode, TensorOut<T>);         \
  template Tensor<T> gated_feature(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,      \
                                   BlockVariant, const GldOptions&);                          \
  template Tensor<T> local_dependency(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,   \
                                      const GldOptions&, TensorOut<T>);

GLDNET_INSTANTIATE(float)
GLDNET_INSTANTIATE(double)

}  // namespace gldnet

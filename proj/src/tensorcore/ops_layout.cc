// Copyright 2026 The GLD-Net Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <numeric>

#include "gldnet/ops.h"

namespace gldnet {

template <typename T>
Tensor<T> reshape(const Tensor<T>& x, Shape shape) {
  if (numel(shape) != x.size()) {
    throw DimensionError("reshape: cannot view " + to_string(x.shape()) + " as " +
                         to_string(shape));
  }
  Tensor<T> out(std::move(shape), x.storage());
  if (needs_grad<T>({&x})) {
    record_op<T>("reshape", {x.impl()}, out, [x, out]() {
      const auto& g = out.impl()->grad;
      auto& gx = grad_buffer(*x.impl());
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
    });
  }
  return out;
}

namespace {

std::vector<std::size_t> strides_of(const Shape& shape) {
  std::vector<std::size_t> s(shape.size(), 1);
  for (std::size_t i = shape.size(); i-- > 1;) s[i - 1] = s[i] * shape[i];
  return s;
}

// src_index[i] is the flat source index of flat destination element i.
std::vector<std::size_t> permutation_map(const Shape& in, const std::vector<std::size_t>& order) {
  const std::size_t rank = in.size();
  Shape out_shape(rank);
  for (std::size_t i = 0; i < rank; ++i) out_shape[i] = in[order[i]];
  const auto in_strides = strides_of(in);
  std::vector<std::size_t> step(rank);
  for (std::size_t i = 0; i < rank; ++i) step[i] = in_strides[order[i]];
  const std::size_t n = numel(in);
  std::vector<std::size_t> map(n);
  std::vector<std::size_t> idx(rank, 0);
  std::size_t src = 0;
  for (std::size_t i = 0; i < n; ++i) {
    map[i] = src;
    for (std::size_t d = rank; d-- > 0;) {
      if (++idx[d] < out_shape[d]) {
        src += step[d];
        break;
      }
      src -= step[d] * (out_shape[d] - 1);
      idx[d] = 0;
    }
  }
  return map;
}

}  // namespace

template <typename T>
Tensor<T> permute(const Tensor<T>& x, const std::vector<std::size_t>& order) {
  const std::size_t rank = x.rank();
  std::vector<std::size_t> check(order);
  std::sort(check.begin(), check.end());
  std::vector<std::size_t> iota(rank);
  std::iota(iota.begin(), iota.end(), 0);
  if (check != iota) {
    throw DimensionError("permute: order is not a permutation of the axes of " +
                         to_string(x.shape()));
  }
  Shape shape(rank);
  for (std::size_t i = 0; i < rank; ++i) shape[i] = x.dim(order[i]);
  auto map = permutation_map(x.shape(), order);
  Tensor<T> out(shape);
  for (std::size_t i = 0; i < map.size(); ++i) out[i] = x[map[i]];
  if (needs_grad<T>({&x})) {
    record_op<T>("permute", {x.impl()}, out, [x, out, map = std::move(map)]() {
      const auto& g = out.impl()->grad;
      auto& gx = grad_buffer(*x.impl());
      for (std::size_t i = 0; i < map.size(); ++i) gx[map[i]] += g[i];
    });
  }
  return out;
}

template <typename T>
Tensor<T> concat(const std::vector<Tensor<T>>& parts, std::size_t axis) {
  if (parts.empty()) throw DimensionError("concat: no inputs");
  const Shape& ref = parts.front().shape();
  if (axis >= ref.size()) {
    throw DimensionError("concat: axis " + std::to_string(axis) + " out of range for " +
                         to_string(ref));
  }
  Shape shape = ref;
  shape[axis] = 0;
  for (const auto& p : parts) {
    bool ok = p.rank() == ref.size();
    for (std::size_t d = 0; ok && d < ref.size(); ++d) {
      if (d != axis && p.dim(d) != ref[d]) ok = false;
    }
    if (!ok) {
      throw DimensionError("concat: " + to_string(p.shape()) + " does not match " +
                           to_string(ref) + " outside axis " + std::to_string(axis));
    }
    shape[axis] += p.dim(axis);
  }
  std::size_t outer = 1, inner = 1;
  for (std::size_t d = 0; d < axis; ++d) outer *= ref[d];
  for (std::size_t d = axis + 1; d < ref.size(); ++d) inner *= ref[d];
  const std::size_t out_row = shape[axis] * inner;

  Tensor<T> out(shape);
  std::size_t offset = 0;
  for (const auto& p : parts) {
    const std::size_t row = p.dim(axis) * inner;
    for (std::size_t o = 0; o < outer; ++o) {
      std::copy_n(p.data().begin() + static_cast<std::ptrdiff_t>(o * row), row,
                  out.data().begin() + static_cast<std::ptrdiff_t>(o * out_row + offset));
    }
    offset += row;
  }

  bool any = false;
  for (const auto& p : parts) any = any || needs_grad<T>({&p});
  if (any) {
    std::vector<std::shared_ptr<TensorImpl<T>>> impls;
    for (const auto& p : parts) impls.push_back(p.impl());
    record_op<T>("concat", impls, out, [parts, out, outer, inner, out_row, axis]() {
      const auto& g = out.impl()->grad;
      std::size_t offset = 0;
      for (const auto& p : parts) {
        const std::size_t row = p.dim(axis) * inner;
        if (p.requires_grad()) {
          auto& gp = grad_buffer(*p.impl());
          for (std::size_t o = 0; o < outer; ++o) {
            for (std::size_t i = 0; i < row; ++i) gp[o * row + i] += g[o * out_row + offset + i];
          }
        }
        offset += row;
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> narrow(const Tensor<T>& x, std::size_t axis, std::size_t start, std::size_t length) {
  if (axis >= x.rank() || start + length > x.dim(axis)) {
    throw DimensionError("narrow: range [" + std::to_string(start) + ", " +
                         std::to_string(start + length) + ") on axis " + std::to_string(axis) +
                         " exceeds " + to_string(x.shape()));
  }
  std::size_t outer = 1, inner = 1;
  for (std::size_t d = 0; d < axis; ++d) outer *= x.dim(d);
  for (std::size_t d = axis + 1; d < x.rank(); ++d) inner *= x.dim(d);
  const std::size_t in_row = x.dim(axis) * inner;
  const std::size_t out_row = length * inner;
  Shape shape = x.shape();
  shape[axis] = length;
  Tensor<T> out(shape);
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t i = 0; i < out_row; ++i) out[o * out_row + i] = x[o * in_row + start * inner + i];
  }
  if (needs_grad<T>({&x})) {
    record_op<T>("narrow", {x.impl()}, out, [x, out, outer, inner, in_row, out_row, start]() {
      const auto& g = out.impl()->grad;
      auto& gx = grad_buffer(*x.impl());
      for (std::size_t o = 0; o < outer; ++o) {
        for (std::size_t i = 0; i < out_row; ++i) gx[o * in_row + start * inner + i] += g[o * out_row + i];
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> overlap_add(const Tensor<T>& frames, std::size_t hop) {
  if (frames.rank() != 2 && frames.rank() != 3) {
    throw DimensionError("overlap_add: expected [N x] T x L frames, got " +
                         to_string(frames.shape()));
  }
  if (hop == 0) throw ContractError("overlap_add: hop must be positive");
  const bool batched = frames.rank() == 3;
  const std::size_t n = batched ? frames.dim(0) : 1;
  const std::size_t t = frames.dim(batched ? 1 : 0);
  const std::size_t len = frames.dim(batched ? 2 : 1);
  if (t == 0) throw DimensionError("overlap_add: zero frames");
  const std::size_t samples = (t - 1) * hop + len;
  Tensor<T> out(batched ? Shape{n, samples} : Shape{samples});
  for (std::size_t b = 0; b < n; ++b) {
    for (std::size_t f = 0; f < t; ++f) {
      const T* src = frames.data().data() + (b * t + f) * len;
      T* dst = out.data().data() + b * samples + f * hop;
      for (std::size_t k = 0; k < len; ++k) dst[k] += src[k];
    }
  }
  if (needs_grad<T>({&frames})) {
    record_op<T>("overlap_add", {frames.impl()}, out, [frames, out, n, t, len, hop, samples]() {
      const auto& g = out.impl()->grad;
      auto& gf = grad_buffer(*frames.impl());
      for (std::size_t b = 0; b < n; ++b) {
        for (std::size_t f = 0; f < t; ++f) {
          for (std::size_t k = 0; k < len; ++k) gf[(b * t + f) * len + k] += g[b * samples + f * hop + k];
        }
      }
    });
  }
  return out;
}

#define GLDNET_INSTANTIATE(T)                                                            \
  template Tensor<T> reshape(const Tensor<T>&, Shape);                                   \
  template Tensor<T> permute(const Tensor<T>&, const std::vector<std::size_t>&);         \
  template Tensor<T> concat(const std::vector<Tensor<T>>&, std::size_t);                 \
  template Tensor<T> narrow(const Tensor<T>&, std::size_t, std::size_t, std::size_t);    \
  template Tensor<T> overlap_add(const Tensor<T>&, std::size_t);

GLDNET_INSTANTIATE(float)
GLDNET_INSTANTIATE(double)

}  // namespace gldnet

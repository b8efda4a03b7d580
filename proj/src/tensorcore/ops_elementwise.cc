// Copyright 2026 The GLD-Net Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <cmath>

#include "gldnet/ops.h"

namespace gldnet {

namespace {

template <typename T>
void require_same_shape(const char* op, const Tensor<T>& a, const Tensor<T>& b) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shapes " + to_string(a.shape()) + " and " +
                         to_string(b.shape()) + " differ");
  }
}

template <typename T>
T sigmoid_scalar(T x) {
  // Split on sign so neither branch overflows exp().
  if (x >= T(0)) return T(1) / (T(1) + std::exp(-x));
  const T e = std::exp(x);
  return e / (T(1) + e);
}

}  // namespace

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape("add", a, b);
  Tensor<T> out(a.shape());
  auto o = out.data();
  auto x = a.data();
  auto y = b.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = x[i] + y[i];
  if (needs_grad<T>({&a, &b})) {
    record_op<T>("add", {a.impl(), b.impl()}, out, [a, b, out]() {
      const auto& g = out.impl()->grad;
      for (const Tensor<T>* in : {&a, &b}) {
        if (!in->requires_grad()) continue;
        auto& gi = grad_buffer(*in->impl());
        for (std::size_t i = 0; i < g.size(); ++i) gi[i] += g[i];
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape("sub", a, b);
  Tensor<T> out(a.shape());
  auto o = out.data();
  auto x = a.data();
  auto y = b.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = x[i] - y[i];
  if (needs_grad<T>({&a, &b})) {
    record_op<T>("sub", {a.impl(), b.impl()}, out, [a, b, out]() {
      const auto& g = out.impl()->grad;
      if (a.requires_grad()) {
        auto& ga = grad_buffer(*a.impl());
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
      }
      if (b.requires_grad()) {
        auto& gb = grad_buffer(*b.impl());
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape("mul", a, b);
  Tensor<T> out(a.shape());
  auto o = out.data();
  auto x = a.data();
  auto y = b.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = x[i] * y[i];
  if (needs_grad<T>({&a, &b})) {
    record_op<T>("mul", {a.impl(), b.impl()}, out, [a, b, out]() {
      const auto& g = out.impl()->grad;
      if (a.requires_grad()) {
        auto& ga = grad_buffer(*a.impl());
        const auto& y = b.impl()->data;
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * y[i];
      }
      if (b.requires_grad()) {
        auto& gb = grad_buffer(*b.impl());
        const auto& x = a.impl()->data;
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * x[i];
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> affine(const Tensor<T>& x, T scale, T shift) {
  Tensor<T> out(x.shape());
  auto o = out.data();
  auto v = x.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = scale * v[i] + shift;
  if (needs_grad<T>({&x})) {
    record_op<T>("affine", {x.impl()}, out, [x, out, scale]() {
      const auto& g = out.impl()->grad;
      auto& gx = grad_buffer(*x.impl());
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += scale * g[i];
    });
  }
  return out;
}

template <typename T>
Tensor<T> scale_by(const Tensor<T>& x, const Tensor<T>& alpha) {
  if (alpha.size() != 1) {
    throw DimensionError("scale_by: scale must hold one value, got shape " +
                         to_string(alpha.shape()));
  }
  const T a = alpha[0];
  Tensor<T> out(x.shape());
  auto o = out.data();
  auto v = x.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = a * v[i];
  if (needs_grad<T>({&x, &alpha})) {
    record_op<T>("scale_by", {x.impl(), alpha.impl()}, out, [x, alpha, out]() {
      const auto& g = out.impl()->grad;
      if (x.requires_grad()) {
        auto& gx = grad_buffer(*x.impl());
        const T a = alpha.impl()->data[0];
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += a * g[i];
      }
      if (alpha.requires_grad()) {
        const auto& v = x.impl()->data;
        T acc = 0;
        for (std::size_t i = 0; i < g.size(); ++i) acc += g[i] * v[i];
        grad_buffer(*alpha.impl())[0] += acc;
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> scale_rows(const Tensor<T>& x, const Tensor<T>& s) {
  if (x.rank() != 3 || s.rank() != 2 || s.dim(0) != x.dim(0) || s.dim(1) != x.dim(1)) {
    throw DimensionError("scale_rows: expected B x M x L and B x M, got " + to_string(x.shape()) +
                         " and " + to_string(s.shape()));
  }
  const std::size_t rows = s.size();
  const std::size_t len = x.dim(2);
  Tensor<T> out(x.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t l = 0; l < len; ++l) out[r * len + l] = x[r * len + l] * s[r];
  }
  if (needs_grad<T>({&x, &s})) {
    record_op<T>("scale_rows", {x.impl(), s.impl()}, out, [x, s, out, rows, len]() {
      const auto& g = out.impl()->grad;
      if (x.requires_grad()) {
        auto& gx = grad_buffer(*x.impl());
        for (std::size_t r = 0; r < rows; ++r) {
          for (std::size_t l = 0; l < len; ++l) gx[r * len + l] += g[r * len + l] * s[r];
        }
      }
      if (s.requires_grad()) {
        auto& gs = grad_buffer(*s.impl());
        for (std::size_t r = 0; r < rows; ++r) {
          T acc = 0;
          for (std::size_t l = 0; l < len; ++l) acc += g[r * len + l] * x[r * len + l];
          gs[r] += acc;
        }
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& x) {
  Tensor<T> out(x.shape());
  auto o = out.data();
  auto v = x.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = sigmoid_scalar(v[i]);
  if (needs_grad<T>({&x})) {
    record_op<T>("sigmoid", {x.impl()}, out, [x, out]() {
      const auto& g = out.impl()->grad;
      const auto& y = out.impl()->data;
      auto& gx = grad_buffer(*x.impl());
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * y[i] * (T(1) - y[i]);
    });
  }
  return out;
}

template <typename T>
Tensor<T> tanh(const Tensor<T>& x) {
  Tensor<T> out(x.shape());
  auto o = out.data();
  auto v = x.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = std::tanh(v[i]);
  if (needs_grad<T>({&x})) {
    record_op<T>("tanh", {x.impl()}, out, [x, out]() {
      const auto& g = out.impl()->grad;
      const auto& y = out.impl()->data;
      auto& gx = grad_buffer(*x.impl());
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * (T(1) - y[i] * y[i]);
    });
  }
  return out;
}

template <typename T>
Tensor<T> elu(const Tensor<T>& x) {
  Tensor<T> out(x.shape());
  auto o = out.data();
  auto v = x.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = v[i] > T(0) ? v[i] : std::expm1(v[i]);
  if (needs_grad<T>({&x})) {
    record_op<T>("elu", {x.impl()}, out, [x, out]() {
      const auto& g = out.impl()->grad;
      const auto& y = out.impl()->data;
      const auto& v = x.impl()->data;
      auto& gx = grad_buffer(*x.impl());
      // d/dx (e^x - 1) = e^x = y + 1 on the negative side.
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += v[i] > T(0) ? g[i] : g[i] * (y[i] + T(1));
    });
  }
  return out;
}

template <typename T>
Tensor<T> pointwise(const Tensor<T>& x, Pointwise kind) {
  switch (kind) {
    case Pointwise::kElu:
      return elu(x);
    case Pointwise::kSigmoid:
      return sigmoid(x);
    case Pointwise::kTanh:
      return tanh(x);
  }
  throw ContractError("pointwise: unknown kind");
}

template <typename T>
Tensor<T> sum(const Tensor<T>& x) {
  T acc = 0;
  for (T v : x.data()) acc += v;
  Tensor<T> out = Tensor<T>::scalar(acc);
  if (needs_grad<T>({&x})) {
    record_op<T>("sum", {x.impl()}, out, [x, out]() {
      const T g = out.impl()->grad[0];
      for (auto& gx : grad_buffer(*x.impl())) gx += g;
    });
  }
  return out;
}

template <typename T>
Tensor<T> mean(const Tensor<T>& x) {
  if (x.size() == 0) throw NumericError("mean of an empty tensor");
  return affine(sum(x), T(1) / static_cast<T>(x.size()), T(0));
}

template <typename T>
Tensor<T> sum_axis(const Tensor<T>& x, std::size_t axis) {
  if (axis >= x.rank()) {
    throw DimensionError("sum_axis: axis " + std::to_string(axis) + " out of range for " +
                         to_string(x.shape()));
  }
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= x.dim(i);
  for (std::size_t i = axis + 1; i < x.rank(); ++i) inner *= x.dim(i);
  const std::size_t len = x.dim(axis);
  Shape shape = x.shape();
  shape.erase(shape.begin() + static_cast<std::ptrdiff_t>(axis));
  if (shape.empty()) shape.push_back(1);
  Tensor<T> out(shape);
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t k = 0; k < len; ++k) {
      for (std::size_t i = 0; i < inner; ++i) out[o * inner + i] += x[(o * len + k) * inner + i];
    }
  }
  if (needs_grad<T>({&x})) {
    record_op<T>("sum_axis", {x.impl()}, out, [x, out, outer, inner, len]() {
      const auto& g = out.impl()->grad;
      auto& gx = grad_buffer(*x.impl());
      for (std::size_t o = 0; o < outer; ++o) {
        for (std::size_t k = 0; k < len; ++k) {
          for (std::size_t i = 0; i < inner; ++i) gx[(o * len + k) * inner + i] += g[o * inner + i];
        }
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> mse_loss(const Tensor<T>& pred, const Tensor<T>& target) {
  if (pred.shape() != target.shape()) {
    throw DimensionError("mse_loss: prediction " + to_string(pred.shape()) + " vs target " +
                         to_string(target.shape()));
  }
  if (pred.size() == 0) throw NumericError("mse_loss of empty tensors");
  const T inv_n = T(1) / static_cast<T>(pred.size());
  T acc = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const T d = pred[i] - target[i];
    acc += d * d;
  }
  Tensor<T> out = Tensor<T>::scalar(acc * inv_n);
  if (needs_grad<T>({&pred, &target})) {
    record_op<T>("mse_loss", {pred.impl(), target.impl()}, out, [pred, target, out, inv_n]() {
      const T g = out.impl()->grad[0];
      const T k = T(2) * inv_n * g;
      if (pred.requires_grad()) {
        auto& gp = grad_buffer(*pred.impl());
        for (std::size_t i = 0; i < gp.size(); ++i) gp[i] += k * (pred[i] - target[i]);
      }
      if (target.requires_grad()) {
        auto& gt = grad_buffer(*target.impl());
        for (std::size_t i = 0; i < gt.size(); ++i) gt[i] -= k * (pred[i] - target[i]);
      }
    });
  }
  return out;
}

#define GLDNET_INSTANTIATE(T)                                                      \
  template Tensor<T> add(const Tensor<T>&, const Tensor<T>&);                      \
  template Tensor<T> sub(const Tensor<T>&, const Tensor<T>&);                      \
  template Tensor<T> mul(const Tensor<T>&, const Tensor<T>&);                      \
  template Tensor<T> affine(const Tensor<T>&, T, T);                               \
  template Tensor<T> scale_by(const Tensor<T>&, const Tensor<T>&);                 \
  template Tensor<T> scale_rows(const Tensor<T>&, const Tensor<T>&);               \
  template Tensor<T> sigmoid(const Tensor<T>&);                                    \
  template Tensor<T> tanh(const Tensor<T>&);                                       \
  template Tensor<T> elu(const Tensor<T>&);                                        \
  template Tensor<T> pointwise(const Tensor<T>&, Pointwise);                       \
  template Tensor<T> sum(const Tensor<T>&);                                        \
  template Tensor<T> mean(const Tensor<T>&);                                       \
  template Tensor<T> sum_axis(const Tensor<T>&, std::size_t);                      \
  template Tensor<T> mse_loss(const Tensor<T>&, const Tensor<T>&);

GLDNET_INSTANTIATE(float)
GLDNET_INSTANTIATE(double)

}  // namespace gldnet

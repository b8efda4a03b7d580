// Copyright 2026 The GLD-Net Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "gldnet/adam.h"

#include <cmath>

namespace gldnet {

template <typename T>
double grad_norm(const ParameterList<T>& params) {
  double total = 0.0;
  for (const auto& p : params) {
    for (T g : p.tensor.grad()) total += static_cast<double>(g) * static_cast<double>(g);
  }
  return std::sqrt(total);
}

template <typename T>
double clip_grad_norm(ParameterList<T>& params, double max_norm) {
  const double norm = grad_norm(params);
  if (norm > max_norm && norm > 0.0) {
    const T scale = static_cast<T>(max_norm / norm);
    for (auto& p : params) {
      if (!p.tensor.has_grad()) continue;
      for (T& g : p.tensor.mutable_grad()) g *= scale;
    }
  }
  return norm;
}

template <typename T>
void adam_step(ParameterList<T>& params, AdamState<T>& state) {
  if (state.first_moment.empty()) {
    for (const auto& p : params) {
      state.first_moment.emplace_back(p.tensor.size(), T(0));
      state.second_moment.emplace_back(p.tensor.size(), T(0));
    }
  }
  if (state.first_moment.size() != params.size()) {
    throw DimensionError("adam_step: optimizer state tracks " +
                         std::to_string(state.first_moment.size()) + " tensors, got " +
                         std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& p = params[i];
    if (state.first_moment[i].size() != p.tensor.size() ||
        state.second_moment[i].size() != p.tensor.size()) {
      throw DimensionError("adam_step: moment buffers do not match parameter '" + p.name + "' " +
                           to_string(p.tensor.shape()));
    }
    for (T g : p.tensor.grad()) {
      if (!std::isfinite(g)) {
        throw NumericError("adam_step: non-finite gradient in parameter '" + p.name + "'");
      }
    }
  }

  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  const T b1 = static_cast<T>(state.beta1);
  const T b2 = static_cast<T>(state.beta2);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = params[i];
    if (!p.tensor.has_grad()) {
      // Zero gradient still decays the moments.
      for (auto& m : state.first_moment[i]) m *= b1;
      for (auto& v : state.second_moment[i]) v *= b2;
    }
    auto grad = p.tensor.grad();
    auto data = p.tensor.data();
    auto& m = state.first_moment[i];
    auto& v = state.second_moment[i];
    for (std::size_t j = 0; j < data.size(); ++j) {
      if (!grad.empty()) {
        const T g = grad[j];
        m[j] = b1 * m[j] + (T(1) - b1) * g;
        v[j] = b2 * v[j] + (T(1) - b2) * g * g;
      }
      const double m_hat = static_cast<double>(m[j]) / c1;
      const double v_hat = static_cast<double>(v[j]) / c2;
      data[j] -= static_cast<T>(state.lr * m_hat / (std::sqrt(v_hat) + state.epsilon));
    }
  }
}

template double grad_norm(const ParameterList<float>&);
template double grad_norm(const ParameterList<double>&);
template double clip_grad_norm(ParameterList<float>&, double);
template double clip_grad_norm(ParameterList<double>&, double);
template void adam_step(ParameterList<float>&, AdamState<float>&);
template void adam_step(ParameterList<double>&, AdamState<double>&);

}  // namespace gldnet

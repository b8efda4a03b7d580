// Copyright 2026 The GLD-Net Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <string>
#include <vector>

#include "gldnet/tensor.h"

namespace gldnet {

template <typename T>
struct NamedTensor {
  std::string name;
  Tensor<T> tensor;
};

// Ordered (name, tensor) pairs. Handles share storage with the owning model.
template <typename T>
using ParameterList = std::vector<NamedTensor<T>>;

template <typename T>
std::size_t parameter_count(const ParameterList<T>& params) {
  std::size_t n = 0;
  for (const auto& p : params) n += p.tensor.size();
  return n;
}

template <typename T>
void zero_grads(ParameterList<T>& params) {
  for (auto& p : params) p.tensor.zero_grad();
}

// Global L2 norm over every gradient buffer present.
template <typename T>
double grad_norm(const ParameterList<T>& params);

// Rescales all gradients so their global L2 norm is at most max_norm.
// Returns the norm before clipping.
template <typename T>
double clip_grad_norm(ParameterList<T>& params, double max_norm);

}  // namespace gldnet

// Copyright 2026 The GLD-Net Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstdint>
#include <vector>

#include "gldnet/parameters.h"

namespace gldnet {

template <typename T>
struct AdamState {
  double lr = 2e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t step = 0;
  // One buffer per parameter, in registration order; zero-filled on first use.
  std::vector<std::vector<T>> first_moment;
  std::vector<std::vector<T>> second_moment;
};

// Bias-corrected Adam update of every parameter from its gradient buffer
// (an absent buffer counts as zero). Throws NumericError naming the first
// parameter whose gradient is not finite; nothing is updated in that case.
template <typename T>
void adam_step(ParameterList<T>& params, AdamState<T>& state);

}  // namespace gldnet

// Copyright 2026 The GLD-Net Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gldnet/grad_check.h"
#include "gldnet/network.h"

namespace gldnet {

struct GradSuiteLine {
  std::string component;  // "op/conv2d", "gld/speech.k.weight", "net/encoder.0.sb.conv.weight", ...
  std::size_t checked = 0;
  double max_rel_error = 0.0;
};

struct GradSuiteOptions {
  std::uint64_t seed = 0;
  bool ops = true;
  bool gld_blocks = true;
  bool network = true;
  double sample_fraction = 0.01;  // of each network parameter tensor, at least one coordinate
  std::size_t frames = 4;         // STFT frames of the network input
  GradCheckOptions check;
};

// Central finite-difference checks in double precision of the primitive ops,
// both GLD block variants (C=4, T=8, F=8, nonzero alpha and beta) and sampled
// coordinates of every parameter tensor of a network built from `model`.
std::vector<GradSuiteLine> run_grad_suite(const ModelConfig& model, const GradSuiteOptions& options);

// Samples round(fraction * size) coordinates of each tensor, at least one.
std::vector<GradCheckTarget> sample_targets(const ParameterList<double>& params, double fraction,
                                            std::uint64_t seed);

}  // namespace gldnet

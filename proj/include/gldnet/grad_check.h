// Copyright 2026 The GLD-Net Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "gldnet/parameters.h"
#include "gldnet/tensor.h"

namespace gldnet {

struct GradCheckOptions {
  double step = 1e-5;
  double tolerance = 1e-4;
  // Denominator floor: error_i = |analytic - numeric| / max(|analytic|, |numeric|, floor).
  double floor = 1e-6;
};

struct GradCheckEntry {
  std::string name;
  std::size_t checked = 0;
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  std::size_t worst_index = 0;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double max_rel_error = 0.0;
  bool passed = true;
};

// Relative error between one analytic and one numeric derivative.
double relative_error(double analytic, double numeric, double floor);

// Central-difference check of f at x for a scalar-valued f.
GradCheckReport grad_check(const std::function<Tensor<double>(const Tensor<double>&)>& f,
                           const Tensor<double>& x, const GradCheckOptions& options = {});

struct GradCheckTarget {
  std::string name;
  Tensor<double> tensor;
  std::vector<std::size_t> coords;  // empty: every coordinate
};

// Checks d(loss)/d(target) for tensors the loss closure reads in place.
// The closure is re-evaluated after perturbing each coordinate.
GradCheckReport grad_check(const std::function<Tensor<double>()>& loss,
                           std::vector<GradCheckTarget> targets,
                           const GradCheckOptions& options = {});

}  // namespace gldnet

// Copyright 2026 The GLD-Net Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "gldnet/grad_check.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "gldnet/graph.h"

namespace gldnet {

double relative_error(double analytic, double numeric, double floor) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / denom;
}

GradCheckReport grad_check(const std::function<Tensor<double>()>& loss,
                           std::vector<GradCheckTarget> targets,
                           const GradCheckOptions& options) {
  for (auto& target : targets) {
    target.tensor.set_requires_grad(true);
    target.tensor.clear_grad();
  }
  {
    Graph<double> graph;
    Tensor<double> value;
    {
      auto scope = graph.activate();
      value = loss();
    }
    graph.backward(value);
  }

  GradCheckReport report;
  for (auto& target : targets) {
    GradCheckEntry entry;
    entry.name = target.name;
    std::vector<std::size_t> coords = target.coords;
    if (coords.empty()) {
      coords.resize(target.tensor.size());
      std::iota(coords.begin(), coords.end(), 0);
    }
    const std::vector<double> analytic = target.tensor.has_grad()
                                             ? std::vector<double>(target.tensor.grad().begin(),
                                                                   target.tensor.grad().end())
                                             : std::vector<double>(target.tensor.size(), 0.0);
    for (std::size_t i : coords) {
      const double saved = target.tensor[i];
      target.tensor[i] = saved + options.step;
      const double up = loss().item();
      target.tensor[i] = saved - options.step;
      const double down = loss().item();
      target.tensor[i] = saved;
      const double numeric = (up - down) / (2.0 * options.step);
      const double rel = relative_error(analytic[i], numeric, options.floor);
      const double abs_err = std::abs(analytic[i] - numeric);
      if (rel > entry.max_rel_error || entry.checked == 0) {
        entry.max_rel_error = std::max(entry.max_rel_error, rel);
        entry.worst_index = i;
      }
      entry.max_abs_error = std::max(entry.max_abs_error, abs_err);
      ++entry.checked;
    }
    report.max_rel_error = std::max(report.max_rel_error, entry.max_rel_error);
    report.entries.push_back(std::move(entry));
  }
  report.passed = report.max_rel_error <= options.tolerance;
  return report;
}

GradCheckReport grad_check(const std::function<Tensor<double>(const Tensor<double>&)>& f,
                           const Tensor<double>& x, const GradCheckOptions& options) {
  Tensor<double> point = x.clone();
  return grad_check([&]() { return f(point); }, {GradCheckTarget{"x", point, {}}}, options);
}

}  // namespace gldnet

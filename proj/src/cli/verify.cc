// Copyright 2026 The GLD-Net Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "gldnet/verify.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <set>

#include "gldnet/blocks.h"
#include "gldnet/gld.h"
#include "gldnet/ops.h"

namespace gldnet {

namespace {

using TensorD = Tensor<double>;

TensorD random_input(Shape shape, Rng& rng) {
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  TensorD t(std::move(shape));
  for (auto& v : t.data()) v = dist(rng);
  return t;
}

class Suite {
 public:
  Suite(const GradSuiteOptions& options) : options_(options), rng_(options.seed) {}

  TensorD input(Shape shape) { return random_input(std::move(shape), rng_); }

  // Weighted mean of f's output, so no coordinate sees a symmetric loss.
  void op(const std::string& name, const std::function<TensorD()>& f,
          std::vector<std::pair<std::string, TensorD>> wrt) {
    auto weight = input(f().shape());
    std::vector<GradCheckTarget> targets;
    for (auto& [n, t] : wrt) targets.push_back({n, t, {}});
    auto report = grad_check([&]() { return mean(mul(f(), weight)); }, targets, options_.check);
    GradSuiteLine line{"op/" + name, 0, 0.0};
    for (const auto& e : report.entries) {
      line.checked += e.checked;
      line.max_rel_error = std::max(line.max_rel_error, e.max_rel_error);
    }
    lines_.push_back(line);
  }

  void per_entry(const std::string& prefix, const GradCheckReport& report) {
    for (const auto& e : report.entries) lines_.push_back({prefix + e.name, e.checked, e.max_rel_error});
  }

  Rng& rng() { return rng_; }
  const GradSuiteOptions& options() const { return options_; }
  std::vector<GradSuiteLine> take() { return std::move(lines_); }

 private:
  GradSuiteOptions options_;
  Rng rng_;
  std::vector<GradSuiteLine> lines_;
};

void run_ops(Suite& s) {
  {
    auto a = s.input({3, 4}), b = s.input({4, 5});
    s.op("matmul", [&]() { return matmul(a, b); }, {{"a", a}, {"b", b}});
  }
  {
    auto a = s.input({2, 3, 4}), b = s.input({2, 4, 3});
    s.op("bmm", [&]() { return bmm(a, b); }, {{"a", a}, {"b", b}});
  }
  {
    auto x = s.input({3, 6});
    s.op("softmax", [&]() { return softmax(x, 1); }, {{"x", x}});
  }
  {
    auto x = s.input({2, 3, 5}), w = s.input({4, 5}), b = s.input({4});
    s.op("linear", [&]() { return linear(x, w, b); }, {{"x", x}, {"weight", w}, {"bias", b}});
  }
  {
    auto x = s.input({2, 3, 5});
    s.op("sigmoid", [&]() { return sigmoid(x); }, {{"x", x}});
    s.op("tanh", [&]() { return tanh(x); }, {{"x", x}});
    s.op("elu", [&]() { return elu(x); }, {{"x", x}});
  }
  {
    ConvGeometry g;
    g.stride_f = 2;
    g.pad_t = 1;
    g.pad_f = 1;
    auto x = s.input({2, 3, 5, 8}), w = s.input({4, 3, 2, 3}), b = s.input({4});
    s.op("conv2d", [&]() { return conv2d(x, w, b, g); }, {{"x", x}, {"weight", w}, {"bias", b}});
    g.output_pad_f = 1;
    auto y = s.input({2, 4, 5, 4}), wt = s.input({4, 3, 2, 3}), bt = s.input({3});
    s.op("conv_transpose2d", [&]() { return conv_transpose2d(y, wt, bt, g); },
         {{"x", y}, {"weight", wt}, {"bias", bt}});
  }
  {
    auto x = s.input({3, 2, 4, 5}), gamma = s.input({2}), beta = s.input({2});
    auto stats = BatchNormStats<double>::make(2);
    s.op("batchnorm2d", [&]() { return batchnorm2d(x, gamma, beta, stats, Mode::kTrain); },
         {{"x", x}, {"gamma", gamma}, {"beta", beta}});
  }
  {
    auto x = s.input({2, 4, 3}), w_ih = s.input({8, 3}), w_hh = s.input({8, 2}), b = s.input({8});
    s.op("lstm", [&]() { return lstm(x, w_ih, w_hh, b); },
         {{"x", x}, {"w_ih", w_ih}, {"w_hh", w_hh}, {"bias", b}});
  }
  {
    auto frames = s.input({2, 5, 8});
    s.op("overlap_add", [&]() { return overlap_add(frames, 3); }, {{"frames", frames}});
  }
}

void run_blocks(Suite& s, const GldOptions& gld) {
  for (auto variant : {BlockVariant::kSpeech, BlockVariant::kInterference}) {
    auto block = GldBlock<double>::make(variant, 4, 4, gld, s.rng());
    std::uniform_real_distribution<double> scalar(0.3, 1.5);
    block.alpha = TensorD::scalar(scalar(s.rng())).set_requires_grad(true);
    block.beta = TensorD::scalar(scalar(s.rng())).set_requires_grad(true);
    auto x = s.input({2, 4, 8, 8});
    auto w = s.input({2, 4, 8, 8});
    ParameterList<double> params;
    block.collect(variant == BlockVariant::kSpeech ? "speech" : "interference", params);
    std::vector<GradCheckTarget> targets;
    for (const auto& p : params) targets.push_back({p.name, p.tensor, {}});
    targets.push_back({"input", x, {}});
    auto report = grad_check([&]() { return mean(mul(block.forward(x, Mode::kTrain), w)); }, targets,
                             s.options().check);
    s.per_entry("gld/", report);
  }
}

void run_network(Suite& s, const ModelConfig& model) {
  GldNet<double> net(model, s.options().seed);
  // Attention scalars start at zero; move them off the saddle so every
  // branch carries gradient.
  std::uniform_real_distribution<double> scalar(0.3, 1.0);
  for (auto& layer : net.encoder) {
    for (auto* block : {&layer.speech, &layer.interference}) {
      if (!block->alpha.defined()) continue;
      block->alpha.data()[0] = scalar(s.rng());
      block->beta.data()[0] = -scalar(s.rng());
    }
  }
  const std::size_t len = (s.options().frames - 1) * model.stft.hop + model.stft.win_len;
  auto noisy = s.input({1, len});
  auto clean = s.input({1, len});
  auto targets = sample_targets(net.parameters(), s.options().sample_fraction, s.options().seed + 1);
  auto report = grad_check([&]() { return mse_loss(net.forward(noisy, Mode::kTrain), clean); }, targets,
                           s.options().check);
  s.per_entry("net/", report);
}

}  // namespace

std::vector<GradCheckTarget> sample_targets(const ParameterList<double>& params, double fraction,
                                            std::uint64_t seed) {
  Rng rng(seed);
  std::vector<GradCheckTarget> targets;
  for (const auto& p : params) {
    const std::size_t n = p.tensor.size();
    const auto k = std::clamp<std::size_t>(static_cast<std::size_t>(std::llround(fraction * n)), 1, n);
    std::set<std::size_t> picked;
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    while (picked.size() < k) picked.insert(pick(rng));
    targets.push_back({p.name, p.tensor, {picked.begin(), picked.end()}});
  }
  return targets;
}

std::vector<GradSuiteLine> run_grad_suite(const ModelConfig& model, const GradSuiteOptions& options) {
  model.validate();
  Suite s(options);
  if (options.ops) run_ops(s);
  if (options.gld_blocks) run_blocks(s, model.gld);
  if (options.network) run_network(s, model);
  return s.take();
}

}  // namespace gldnet

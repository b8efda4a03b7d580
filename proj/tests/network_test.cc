// Copyright 2026 The GLD-Net Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <set>

#include "gldnet/error.h"
#include "gldnet/grad_check.h"
#include "gldnet/graph.h"
#include "gldnet/network.h"
#include "test_util.h"

namespace gldnet {
namespace {

using testing::random_tensor;
using TensorD = Tensor<double>;

template <typename T>
bool bitwise_equal(const Tensor<T>& a, const Tensor<T>& b) {
  return a.shape() == b.shape() &&
         std::memcmp(a.data().data(), b.data().data(), a.size() * sizeof(T)) == 0;
}

ModelConfig tiny_without(bool sb, bool ib) {
  auto cfg = ModelConfig::tiny();
  cfg.enable_sb = sb;
  cfg.enable_ib = ib;
  return cfg;
}

// Samples of length (frames - 1) * hop + win for the tiny preset.
std::size_t tiny_samples(std::size_t frames) {
  const auto s = ModelConfig::tiny().stft;
  return (frames - 1) * s.hop + s.win_len;
}

// ---- GLD layer -----------------------------------------------------------------

TEST(GldLayerTest, FullScheduleSecondLayerHalvesFrequency) {
  Rng rng(1);
  auto layer = GldLayer<float>::make(16, 32, ModelConfig::full(), rng);
  auto y = layer.forward(random_tensor<float>(Shape{1, 16, 3, 256}, 2), Mode::kTrain);
  EXPECT_EQ(y.shape(), (Shape{1, 32, 3, 128}));
}

TEST(GldLayerTest, GateStrictlyInsideUnitInterval) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Rng rng(10 + seed);
    auto layer = GldLayer<double>::make(2, 4, ModelConfig::tiny(), rng);
    TensorD gate;
    layer.forward(random_tensor(Shape{2, 2, 4, 16}, 20 + seed, -5, 5), Mode::kTrain, &gate);
    ASSERT_TRUE(gate.defined());
    EXPECT_EQ(gate.shape(), (Shape{2, 4, 4, 16}));
    for (double g : gate.data()) {
      EXPECT_GT(g, 0.0);
      EXPECT_LT(g, 1.0);
    }
  }
}

TEST(GldLayerTest, BothBranchesOffMatchesConvOnlyComposition) {
  const auto cfg = tiny_without(false, false);
  auto x = random_tensor(Shape{2, 3, 4, 8}, 31);
  Rng rng(30);
  auto layer = GldLayer<double>::make(3, 5, cfg, rng);

  // Conv-only oracle assembled from bare blocks drawn from the same stream.
  Rng oracle_rng(30);
  auto i0 = ConvBlock<double>::make(BlockKind::kConv, 3, 5, same_geometry(), oracle_rng);
  auto i1 = ConvBlock<double>::make(BlockKind::kConv, 5, 5, same_geometry(), oracle_rng);
  auto down = ConvBlock<double>::make(BlockKind::kConv, 5, 5, downsample_geometry(), oracle_rng);
  auto expected = down.forward(i1.forward(i0.forward(x, Mode::kTrain), Mode::kTrain), Mode::kTrain);

  TensorD gate;
  auto y = layer.forward(x, Mode::kTrain, &gate);
  EXPECT_FALSE(gate.defined());
  EXPECT_TRUE(bitwise_equal(y, expected));

  ParameterList<double> params;
  layer.collect("l", params);
  EXPECT_EQ(params.size(), 12u);  // two intermediate blocks and the down conv, four tensors each
}

TEST(GldLayerTest, BranchParametersDoNotPerturbConvPath) {
  auto x = random_tensor(Shape{1, 2, 3, 8}, 41);
  Rng a(40), b(40);
  auto bare = GldLayer<double>::make(2, 4, tiny_without(false, false), a);
  auto full = GldLayer<double>::make(2, 4, ModelConfig::tiny(), b);
  full.enable_sb = false;
  full.enable_ib = false;
  EXPECT_TRUE(bitwise_equal(bare.forward(x, Mode::kTrain), full.forward(x, Mode::kTrain)));
}

TEST(GldLayerTest, MismatchedBranchNamesTheBranch) {
  Rng rng(50);
  auto layer = GldLayer<double>::make(2, 4, ModelConfig::tiny(), rng);
  // A strided noisy-branch conv breaks the shared plane.
  layer.nb.geom = downsample_geometry();
  try {
    layer.forward(random_tensor(Shape{1, 2, 3, 8}, 51), Mode::kTrain);
    FAIL() << "expected DimensionError";
  } catch (const DimensionError& e) {
    EXPECT_NE(std::string(e.what()).find("noisy branch"), std::string::npos) << e.what();
  }
}

TEST(GldLayerTest, AblationParameterCountOrdering) {
  auto count = [](bool sb, bool ib) {
    return parameter_count(GldNet<float>(tiny_without(sb, ib), 0).parameters());
  };
  const auto full = count(true, true), no_ib = count(true, false), no_sb = count(false, true),
             neither = count(false, false);
  EXPECT_GT(full, no_ib);
  EXPECT_GT(no_ib, neither);
  EXPECT_GT(full, no_sb);
  EXPECT_GT(no_sb, neither);
}

// ---- encoder / bottleneck / decoder ------------------------------------------------

TEST(EncoderTest, FullPresetScheduleReachesEightBins) {
  GldNet<float> net(ModelConfig::full(), 3);
  auto enc = net.encoder_forward(random_tensor<float>(Shape{1, 2, 2, 256}, 4), Mode::kTrain);
  ASSERT_EQ(enc.skips.size(), 5u);
  const std::size_t channels[] = {16, 32, 64, 128, 256};
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_EQ(enc.skips[i].shape(), (Shape{1, channels[i], 2, std::size_t{128} >> i}));
  }
  EXPECT_EQ(enc.features.shape(), (Shape{1, 256, 2, 8}));
}

TEST(EncoderTest, TinyPresetBottleneckShape) {
  GldNet<double> net(ModelConfig::tiny(), 5);
  auto enc = net.encoder_forward(random_tensor(Shape{2, 2, 3, 64}, 6), Mode::kTrain);
  EXPECT_EQ(enc.skips.size(), 5u);
  EXPECT_EQ(enc.features.shape(), (Shape{2, 16, 3, 2}));
}

TEST(EncoderTest, RejectsWrongInputChannels) {
  GldNet<double> net(ModelConfig::tiny(), 5);
  EXPECT_THROW(net.encoder_forward(random_tensor(Shape{1, 3, 3, 64}, 6), Mode::kTrain),
               DimensionError);
}

TEST(BottleneckTest, PreservesShape) {
  GldNet<double> net(ModelConfig::tiny(), 7);
  auto x = random_tensor(Shape{2, 16, 5, 2}, 8);
  EXPECT_EQ(net.bottleneck_forward(x).shape(), x.shape());
}

TEST(BottleneckTest, ZeroWeightsGiveZeroOutput) {
  GldNet<double> net(ModelConfig::tiny(), 9);
  ParameterList<double> params;
  net.bottleneck.collect("b", params);
  for (auto& p : params) std::fill(p.tensor.data().begin(), p.tensor.data().end(), 0.0);
  auto y = net.bottleneck_forward(random_tensor(Shape{1, 16, 4, 2}, 10));
  for (double v : y.data()) EXPECT_EQ(v, 0.0);
}

TEST(BottleneckTest, GradientsOnTwoFrames) {
  auto cfg = ModelConfig::tiny();
  cfg.lstm_hidden = 5;
  Rng rng(11);
  auto b = Bottleneck<double>::make(3 * 2, cfg, rng);
  auto x = random_tensor(Shape{1, 3, 2, 2}, 12).set_requires_grad(true);
  auto w = random_tensor(Shape{1, 3, 2, 2}, 13);
  ParameterList<double> params;
  b.collect("bottleneck", params);
  std::vector<GradCheckTarget> targets{{"input", x, {}}};
  for (const auto& p : params) targets.push_back({p.name, p.tensor, {}});
  auto report = grad_check([&]() { return mean(mul(b.forward(x), w)); }, targets);
  for (const auto& e : report.entries) EXPECT_LE(e.max_rel_error, 1e-4) << e.name;
}

TEST(DecoderTest, MirrorsEncoderInputShape) {
  GldNet<double> net(ModelConfig::tiny(), 14);
  auto spec = random_tensor(Shape{1, 2, 3, 64}, 15);
  auto enc = net.encoder_forward(spec, Mode::kTrain);
  auto y = net.decoder_forward(net.bottleneck_forward(enc.features), enc.skips, Mode::kTrain);
  EXPECT_EQ(y.shape(), (Shape{1, 1, 3, 64}));
}

TEST(DecoderTest, ChannelScheduleFollowsConfig) {
  GldNet<float> net(ModelConfig::full(), 0);
  const std::size_t expected[] = {128, 64, 32, 16, 1};
  ASSERT_EQ(net.decoder.size(), 5u);
  for (std::size_t i = 0; i < 5; ++i) EXPECT_EQ(net.decoder[i].weight.dim(1), expected[i]);
}

TEST(DecoderTest, SkipMismatchNamesTheLayer) {
  GldNet<double> net(ModelConfig::tiny(), 16);
  auto enc = net.encoder_forward(random_tensor(Shape{1, 2, 3, 64}, 17), Mode::kTrain);
  auto skips = enc.skips;
  skips[2] = random_tensor(Shape{1, 8, 3, 7}, 18);
  try {
    net.decoder_forward(enc.features, skips, Mode::kTrain);
    FAIL() << "expected DimensionError";
  } catch (const DimensionError& e) {
    EXPECT_NE(std::string(e.what()).find("decoder layer 2"), std::string::npos) << e.what();
  }
}

TEST(DecoderTest, SkipContentChangesOutput) {
  GldNet<double> net(ModelConfig::tiny(), 19);
  auto enc = net.encoder_forward(random_tensor(Shape{1, 2, 4, 64}, 20), Mode::kTrain);
  auto bottom = net.bottleneck_forward(enc.features);
  auto with = net.decoder_forward(bottom, enc.skips, Mode::kTrain);
  std::vector<TensorD> zeros;
  for (const auto& s : enc.skips) zeros.emplace_back(s.shape());
  auto without = net.decoder_forward(bottom, zeros, Mode::kTrain);
  double diff = 0;
  for (std::size_t i = 0; i < with.size(); ++i) diff = std::max(diff, std::abs(with[i] - without[i]));
  EXPECT_GT(diff, 1e-6);
}

// ---- end to end ----------------------------------------------------------------

TEST(GldNetTest, OutputLengthEqualsInput) {
  GldNet<float> net(ModelConfig::tiny(), 21);
  for (std::size_t s : {std::size_t{128}, std::size_t{129}, std::size_t{1000}, std::size_t{16000}}) {
    auto y = net.forward(random_tensor<float>(Shape{2, s}, 22), Mode::kEval);
    EXPECT_EQ(y.shape(), (Shape{2, s}));
  }
}

TEST(GldNetTest, RiHeadWithIstftInitRuns) {
  auto cfg = ModelConfig::tiny();
  cfg.head = OutputHead::kRealImag;
  cfg.decoder_init = DecoderInit::kIstft;
  GldNet<double> net(cfg, 23);
  EXPECT_EQ(net.synthesis.kernel.shape(), (Shape{128, 128}));
  auto y = net.forward(random_tensor(Shape{1, 700}, 24), Mode::kTrain);
  EXPECT_EQ(y.shape(), (Shape{1, 700}));
}

TEST(GldNetTest, ShorterThanWindowIsRejected) {
  GldNet<double> net(ModelConfig::tiny(), 25);
  EXPECT_THROW(net.forward(TensorD(Shape{1, 100}), Mode::kEval), ContractError);
}

TEST(GldNetTest, ZeroInputGivesFiniteOutput) {
  GldNet<float> net(ModelConfig::tiny(), 26);
  for (Mode mode : {Mode::kTrain, Mode::kEval}) {
    auto y = net.forward(Tensor<float>(Shape{1, 4000}), mode);
    for (float v : y.data()) ASSERT_TRUE(std::isfinite(v));
  }
}

TEST(GldNetTest, FixedSeedIsBitwiseDeterministic) {
  auto x = random_tensor<float>(Shape{2, 3000}, 27);
  GldNet<float> a(ModelConfig::tiny(), 28), b(ModelConfig::tiny(), 28), c(ModelConfig::tiny(), 29);
  auto ya = a.forward(x, Mode::kTrain);
  EXPECT_TRUE(bitwise_equal(ya, b.forward(x, Mode::kTrain)));
  EXPECT_FALSE(bitwise_equal(ya, c.forward(x, Mode::kTrain)));
}

TEST(GldNetTest, ParameterNamesAreUnique) {
  GldNet<float> net(ModelConfig::tiny(), 0);
  std::set<std::string> names;
  std::set<const void*> storage;
  for (const auto& p : net.parameters()) {
    EXPECT_TRUE(names.insert(p.name).second) << p.name;
    EXPECT_TRUE(storage.insert(p.tensor.impl().get()).second) << p.name;
  }
}

TEST(GldNetTest, NoDeadParameters) {
  GldNet<float> net(ModelConfig::tiny(), 30);
  auto noisy = random_tensor<float>(Shape{2, 1000}, 31);
  auto clean = random_tensor<float>(Shape{2, 1000}, 32);
  Graph<float> graph;
  Tensor<float> loss;
  {
    auto scope = graph.activate();
    loss = mse_loss(net.forward(noisy, Mode::kTrain), clean);
  }
  graph.backward(loss);
  for (const auto& p : net.parameters()) EXPECT_TRUE(p.tensor.has_grad()) << p.name;
}

// About 1% of each parameter tensor, at least one coordinate.
std::vector<GradCheckTarget> sampled_targets(const ParameterList<double>& params, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<GradCheckTarget> targets;
  for (const auto& p : params) {
    const std::size_t n = p.tensor.size();
    const std::size_t k = std::max<std::size_t>(1, n / 100);
    std::set<std::size_t> picked;
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    while (picked.size() < k) picked.insert(pick(rng));
    targets.push_back({p.name, p.tensor, {picked.begin(), picked.end()}});
  }
  return targets;
}

TEST(GldNetTest, SampledParameterGradientsPassFiniteDifference) {
  GldNet<double> net(ModelConfig::tiny(), 33);
  // Nonzero attention scalars so the attention paths carry gradient.
  for (auto& layer : net.encoder) {
    layer.speech.alpha.data()[0] = 0.5;
    layer.speech.beta.data()[0] = -0.4;
    layer.interference.alpha.data()[0] = 0.3;
    layer.interference.beta.data()[0] = 0.6;
  }
  const std::size_t s = tiny_samples(4);
  auto noisy = random_tensor(Shape{1, s}, 34);
  auto clean = random_tensor(Shape{1, s}, 35);
  auto report = grad_check([&]() { return mse_loss(net.forward(noisy, Mode::kTrain), clean); },
                           sampled_targets(net.parameters(), 36));
  for (const auto& e : report.entries) EXPECT_LE(e.max_rel_error, 1e-4) << e.name;
}

TEST(GldNetTest, SinglePrecisionGradientsTrackDoublePrecision) {
  GldNet<float> netf(ModelConfig::tiny(), 37);
  GldNet<double> netd(ModelConfig::tiny(), 37);
  const std::size_t s = tiny_samples(6);
  auto noisy = random_tensor(Shape{1, s}, 38);
  auto clean = random_tensor(Shape{1, s}, 39);
  auto run = [&](auto& net, const auto& x, const auto& y) {
    using T = std::decay_t<decltype(x.data()[0])>;
    Graph<T> graph;
    Tensor<T> loss;
    {
      auto scope = graph.activate();
      loss = mse_loss(net.forward(x, Mode::kTrain), y);
    }
    graph.backward(loss);
  };
  run(netd, noisy, clean);
  run(netf, cast<float>(noisy), cast<float>(clean));
  auto pf = netf.parameters();
  auto pd = netd.parameters();
  ASSERT_EQ(pf.size(), pd.size());
  for (std::size_t i = 0; i < pf.size(); ++i) {
    double num = 0, den = 0;
    const auto& gf = pf[i].tensor.grad();
    const auto& gd = pd[i].tensor.grad();
    for (std::size_t j = 0; j < gd.size(); ++j) {
      num += (gf[j] - gd[j]) * (gf[j] - gd[j]);
      den += gd[j] * gd[j];
    }
    if (den < 1e-20) continue;  // exactly-zero gradients (biases ahead of batch norm)
    EXPECT_LE(std::sqrt(num / den), 1e-3) << pf[i].name;
  }
}

}  // namespace
}  // namespace gldnet

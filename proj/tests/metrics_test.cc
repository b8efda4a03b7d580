// Copyright 2026 The GLD-Net Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "gldnet/data.h"
#include "gldnet/error.h"
#include "gldnet/metrics.h"
#include "test_util.h"

namespace gldnet {
namespace {

using testing::random_vector;

double dotv(const std::vector<double>& a, const std::vector<double>& b) {
  double acc = 0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

// Component of `v` orthogonal to `ref`, rescaled to `ref`'s energy times `ratio`.
std::vector<double> orthogonal_to(const std::vector<double>& ref, std::vector<double> v, double ratio) {
  const double c = dotv(v, ref) / dotv(ref, ref);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] -= c * ref[i];
  const double s = std::sqrt(ratio * dotv(ref, ref) / dotv(v, v));
  for (double& x : v) x *= s;
  return v;
}

std::vector<double> white(std::size_t n, std::uint64_t seed, double sigma = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, sigma);
  std::vector<double> v(n);
  for (double& x : v) x = g(rng);
  return v;
}

// ---- SI-SDR ------------------------------------------------------------------------

TEST(SiSdrTest, ScaledCopyHitsCeiling) {
  auto ref = random_vector(1000, 1);
  std::vector<double> est(ref);
  for (double& v : est) v *= 3.7;
  EXPECT_EQ(si_sdr(ref, est), kSiSdrCeiling);
}

TEST(SiSdrTest, EqualPowerOrthogonalNoiseIsZeroDb) {
  auto ref = random_vector(4000, 2);
  auto noise = orthogonal_to(ref, random_vector(4000, 3), 1.0);
  std::vector<double> est(ref);
  for (std::size_t i = 0; i < est.size(); ++i) est[i] += noise[i];
  EXPECT_NEAR(si_sdr(ref, est), 0.0, 1e-9);
}

TEST(SiSdrTest, MatchesProjectionFormula) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto ref = random_vector(2000, 10 + seed);
    const double a = 0.2 + 0.1 * static_cast<double>(seed);
    const double ratio = 0.01 + 0.05 * static_cast<double>(seed);
    auto e = orthogonal_to(ref, random_vector(2000, 50 + seed), ratio);
    std::vector<double> est(ref.size());
    for (std::size_t i = 0; i < ref.size(); ++i) est[i] = a * ref[i] + e[i];
    const double expected = 10 * std::log10(a * a / ratio);
    EXPECT_NEAR(si_sdr(ref, est), expected, 1e-9);
  }
}

TEST(SiSdrTest, ScaleInvariantAndTranslationSensitive) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    auto ref = random_vector(1600, 100 + seed);
    auto est = random_vector(1600, 200 + seed);
    for (std::size_t i = 0; i < ref.size(); ++i) est[i] += ref[i];
    const double base = si_sdr(ref, est);
    for (double a : {1e-3, 0.5, 7.0, 1e3}) {
      std::vector<double> scaled(est);
      for (double& v : scaled) v *= a;
      EXPECT_NEAR(si_sdr(ref, scaled), base, 1e-9);
    }
    std::vector<double> shifted(est);
    for (double& v : shifted) v += 0.3;
    EXPECT_GT(std::abs(si_sdr(ref, shifted) - base), 1e-3);
  }
}

TEST(SiSdrTest, ContractViolations) {
  EXPECT_THROW(si_sdr(std::vector<double>(10, 0.0), random_vector(10, 1)), ContractError);
  EXPECT_THROW(si_sdr(random_vector(10, 1), random_vector(11, 1)), ContractError);
}

// ---- segmental SNR --------------------------------------------------------------

TEST(SegSnrTest, IdentityHitsCeiling) {
  auto ref = random_vector(8000, 5);
  EXPECT_EQ(seg_snr(ref, ref), 35.0);
}

TEST(SegSnrTest, ZeroEstimateIsZeroDbPerFrame) {
  // Error energy equals reference energy in every frame.
  auto ref = random_vector(8000, 6);
  EXPECT_NEAR(seg_snr(ref, std::vector<double>(8000, 0.0)), 0.0, 1e-12);
}

TEST(SegSnrTest, StrongNegationClampsAtFloor) {
  auto ref = random_vector(8000, 7);
  std::vector<double> est(ref);
  for (double& v : est) v *= -3.0;  // error 4 x ref: -12 dB per frame
  EXPECT_EQ(seg_snr(ref, est), -10.0);
}

TEST(SegSnrTest, SilentFramesAreSkipped) {
  auto ref = random_vector(8192, 8);
  std::fill(ref.begin(), ref.begin() + 4096, 0.0);
  std::vector<double> est(ref);
  for (std::size_t i = 4096; i < est.size(); ++i) est[i] *= 0.9;  // 20 dB in active frames
  // Frames overlapping only the silent half are excluded; straddling frames see the same ratio.
  EXPECT_NEAR(seg_snr(ref, est), 20.0, 1e-9);
  EXPECT_THROW(seg_snr(std::vector<double>(4096, 1e-4), std::vector<double>(4096, 0.0)), ContractError);
}

TEST(SegSnrTest, WhiteNoiseAtZeroDbStaysNearZero) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    auto ref = white(16000, 300 + seed, 0.1);
    auto noise = white(16000, 600 + seed);
    const double g = std::sqrt(dotv(ref, ref) / dotv(noise, noise));
    std::vector<double> est(ref);
    for (std::size_t i = 0; i < est.size(); ++i) est[i] += g * noise[i];
    const double v = seg_snr(ref, est);
    EXPECT_GE(v, -5.0);
    EXPECT_LE(v, 5.0);
  }
}

// ---- STOI --------------------------------------------------------------------------

TEST(ResampleTest, SinusoidSurvivesRateChange) {
  std::vector<double> x(16000);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::sin(2 * std::numbers::pi * 1000.0 * i / 16000.0);
  auto y = resample_rational(x, 10000, 16000);
  ASSERT_EQ(y.size(), 10000u);
  for (std::size_t i = 500; i < 9500; ++i) {
    ASSERT_NEAR(y[i], std::sin(2 * std::numbers::pi * 1000.0 * i / 10000.0), 2e-3) << i;
  }
  EXPECT_EQ(resample_rational(x, 3, 3), x);
}

TEST(StoiTest, IdentityIsOne) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto m = synth_toy_pair(seed % 2 ? ToyKind::kTones : ToyKind::kChirp, ToyNoise::kWhite, 0, seed);
    EXPECT_GE(stoi(m.clean.samples, m.clean.samples), 0.999);
  }
}

TEST(StoiTest, WhiteNoiseEstimateScoresLow) {
  double worst = -1;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto m = synth_toy_pair(ToyKind::kTones, ToyNoise::kWhite, 0, 900 + seed);
    const double s = stoi(m.clean.samples, white(16000, 950 + seed, 0.1));
    EXPECT_GE(s, -1.0);
    worst = std::max(worst, s);
  }
  EXPECT_LT(worst, 0.2);
}

TEST(StoiTest, HigherMixingSnrScoresHigher) {
  int wins = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    auto hi = synth_toy_pair(ToyKind::kTones, ToyNoise::kWhite, 10, 2000 + seed);
    auto lo = synth_toy_pair(ToyKind::kTones, ToyNoise::kWhite, -5, 2000 + seed);
    ASSERT_EQ(hi.clean.samples.size(), lo.clean.samples.size());
    if (stoi(hi.clean.samples, hi.noisy.samples) > stoi(lo.clean.samples, lo.noisy.samples)) ++wins;
  }
  EXPECT_GE(wins, 95);
}

// Reference scores from the pystoi 0.4.1 implementation on the same pairs.
TEST(StoiTest, MatchesReferenceImplementation) {
  const double expected[] = {0.703896, 0.407542, 0.153245, 0.756012, 0.165901, 0.335564};
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    auto m = synth_toy_pair(seed % 2 ? ToyKind::kChirp : ToyKind::kTones,
                            seed % 3 ? ToyNoise::kWhite : ToyNoise::kHum, -5.0 + 3.0 * seed, seed, 24000);
    EXPECT_NEAR(stoi(m.clean.samples, m.noisy.samples), expected[seed], 2e-6) << seed;
  }
}

TEST(StoiTest, RejectsShortInput) {
  auto x = random_vector(15999, 1);
  EXPECT_THROW(stoi(x, x), ContractError);
  EXPECT_THROW(stoi(std::vector<double>(16000, 0.0), std::vector<double>(16000, 0.0)), ContractError);
}

// ---- report --------------------------------------------------------------------------

TEST(MetricReportTest, EmptyConditionIsAbsent) {
  MetricReport r;
  r.add({"u1", "Unprocessed", -5, Metric::kStoi, 0.5});
  r.add({"u2", "Unprocessed", -5, Metric::kStoi, 0.7});
  r.add({"u3", "Unprocessed", 10, Metric::kStoi, 0.9});
  EXPECT_NEAR(*r.mean("Unprocessed", Metric::kStoi, -5), 0.6, 1e-12);
  EXPECT_FALSE(r.mean("Unprocessed", Metric::kStoi, 0).has_value());
  EXPECT_FALSE(r.mean("Unprocessed", Metric::kSiSdr, -5).has_value());
  EXPECT_NEAR(*r.average("Unprocessed", Metric::kStoi), 0.75, 1e-12);
}

TEST(MetricReportTest, TableHasConditionColumnsAverageAndSystemRows) {
  MetricReport r;
  for (double c : {-5.0, 0.0, 5.0, 10.0}) {
    for (Metric m : kAllMetrics) {
      r.add({"a", "Unprocessed", c, m, m == Metric::kStoi ? 0.5 : c});
      r.add({"a", "GLD-Net", c, m, m == Metric::kStoi ? 0.8 : c + 3});
    }
  }
  const auto t = r.table();
  std::istringstream in(t);
  std::string header, snr, row1, row2;
  std::getline(in, header);
  std::getline(in, snr);
  std::getline(in, row1);
  std::getline(in, row2);
  EXPECT_NE(header.find("SI-SDR"), std::string::npos);
  EXPECT_NE(header.find("STOI (%)"), std::string::npos);
  EXPECT_EQ(snr.rfind("Test SNR", 0), 0u);
  std::istringstream cols(snr.substr(8));
  std::vector<std::string> tokens;
  for (std::string tok; cols >> tok;) {
    if (tok != "|") tokens.push_back(tok.front() == '|' ? tok.substr(1) : tok);
  }
  const std::vector<std::string> block{"-5", "0", "5", "10", "Avg."};
  ASSERT_EQ(tokens.size(), 15u) << snr;
  for (std::size_t i = 0; i < 15; ++i) EXPECT_EQ(tokens[i], block[i % 5]);
  EXPECT_EQ(row1.rfind("Unprocessed", 0), 0u);
  EXPECT_EQ(row2.rfind("GLD-Net", 0), 0u);
  EXPECT_NE(row1.find("50.00"), std::string::npos);  // STOI in percent
  EXPECT_NE(row2.find("80.00"), std::string::npos);
  const auto records = r.records_text();
  EXPECT_EQ(std::count(records.begin(), records.end(), '\n'), 24);
}

}  // namespace
}  // namespace gldnet

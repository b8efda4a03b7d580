// Copyright 2026 The GLD-Net Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
//
// Acceptance run: one PASS/FAIL line per criterion. Pass criterion numbers as
// arguments to run a subset. Exit status is nonzero if any selected criterion fails.

#include <fmt/core.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "gldnet/data.h"
#include "gldnet/gld.h"
#include "gldnet/metrics.h"
#include "gldnet/network.h"
#include "gldnet/ops.h"
#include "gldnet/signal.h"
#include "gldnet/trainer.h"
#include "gldnet/verify.h"

namespace fs = std::filesystem;
using namespace gldnet;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  std::string name;
  double limit_s;
  std::function<Outcome()> run;
};

std::vector<double> uniform(std::size_t n, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

Tensor<double> uniform_tensor(Shape shape, std::mt19937_64& rng) {
  Tensor<double> t(std::move(shape));
  auto v = uniform(t.size(), rng);
  std::copy(v.begin(), v.end(), t.data().begin());
  return t;
}

// Relative L2 error over [skip, n - skip).
double rel_l2(std::span<const double> a, std::span<const double> ref, std::size_t skip) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = skip; i + skip < ref.size(); ++i) {
    num += (a[i] - ref[i]) * (a[i] - ref[i]);
    den += ref[i] * ref[i];
  }
  return std::sqrt(num / den);
}

// ---- 1 ---------------------------------------------------------------------------

Outcome attention_rows() {
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<std::size_t> dim(2, 8);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t c = dim(rng), t = dim(rng), f = dim(rng);
    auto block = GldBlock<double>::make(trial % 2 ? BlockVariant::kSpeech : BlockVariant::kInterference, c, c,
                                        GldOptions{}, rng);
    block.alpha.data()[0] = 0.7;
    block.beta.data()[0] = -0.4;
    GldTrace<double> trace;
    block.forward(uniform_tensor(Shape{2, c, t, f}, rng), Mode::kTrain, &trace);
    for (const auto* map : {&trace.x, &trace.y}) {
      const auto v = map->data();
      for (std::size_t row = 0; row < v.size() / c; ++row) {
        double s = 0.0;
        for (std::size_t j = 0; j < c; ++j) s += v[row * c + j];
        worst = std::max(worst, std::abs(s - 1.0));
      }
    }
  }
  return {worst <= 1e-6, fmt::format("max |row sum - 1| over X and Y, 100 inputs: {:.2e} (tol 1e-6)", worst)};
}

// ---- 2 ---------------------------------------------------------------------------

Outcome zero_init_degeneracy() {
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<std::size_t> dim(2, 8);
  std::size_t nonzero = 0, checked = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t c = dim(rng), t = dim(rng), f = dim(rng);
    auto block = GldBlock<double>::make(trial % 2 ? BlockVariant::kSpeech : BlockVariant::kInterference, c, c,
                                        GldOptions{}, rng);
    auto x = uniform_tensor(Shape{1, c, t, f}, rng);
    for (auto& v : x.data()) v *= 100.0;
    GldTrace<double> trace;
    block.forward(x, Mode::kTrain, &trace);
    for (double v : trace.l.data()) nonzero += v != 0.0;
    checked += trace.l.size();
  }
  return {nonzero == 0, fmt::format("alpha = beta = 0: {} of {} entries of L nonzero (want exactly 0)", nonzero,
                                    checked)};
}

// ---- 3 ---------------------------------------------------------------------------

Outcome gradients() {
  double worst = 0.0;
  std::string worst_name;
  std::size_t lines = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    GradSuiteOptions opt;
    opt.seed = seed;
    opt.ops = false;
    for (const auto& l : run_grad_suite(ModelConfig::tiny(), opt)) {
      ++lines;
      if (l.max_rel_error > worst) {
        worst = l.max_rel_error;
        worst_name = l.component;
      }
    }
  }
  return {worst <= 1e-4, fmt::format("GLD blocks (C=4,T=8,F=8) + 1% of every tiny-net tensor, 10 seeds, {} "
                                     "checks: max rel err {:.2e} at {} (tol 1e-4)",
                                     lines, worst, worst_name)};
}

// ---- 4 ---------------------------------------------------------------------------

Outcome stft_fidelity() {
  std::mt19937_64 rng(4);
  const StftConfig cfg;
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    auto x = uniform(kSampleRate, rng);
    auto y = istft(stft(x, cfg), cfg, x.size());
    worst = std::max(worst, rel_l2(y, x, cfg.win_len));
  }
  return {worst <= 1e-6, fmt::format("100 random 1 s signals, interior rel L2: {:.2e} (tol 1e-6)", worst)};
}

// ---- 5 ---------------------------------------------------------------------------

Outcome decoder_equivalence() {
  std::mt19937_64 rng(5);
  const StftConfig cfg;
  auto dec = init_decoder_as_istft(cfg);
  std::normal_distribution<double> normal;
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    Tensor<double> spec(Shape{63, cfg.bins(), 2});
    for (auto& v : spec.data()) v = normal(rng);
    auto y = apply_learnable_decoder(spectrogram_to_frames(spec), dec);
    auto ref = istft(spec, cfg);
    worst = std::max(worst, rel_l2(y.data(), ref, cfg.win_len));
  }
  return {worst <= 1e-5,
          fmt::format("iSTFT-initialized decoder vs istft, 100 random spectrograms: {:.2e} (tol 1e-5)", worst)};
}

// ---- 6 ---------------------------------------------------------------------------

Outcome mixture_snr() {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> normal;
  double worst = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    Waveform clean{std::vector<double>(16000)}, noise{std::vector<double>(9000 + 3000 * trial)};
    for (auto& v : clean.samples) v = 0.1 * normal(rng);
    for (auto& v : noise.samples) v = 0.3 * normal(rng);
    for (double snr : kTrainSnrs) {
      auto m = mix_at_snr(clean, noise, snr, rng());
      worst = std::max(worst, std::abs(snr_db(m.clean.samples, m.scaled_noise.samples) - snr));
    }
  }
  return {worst <= 1e-6, fmt::format("SNRs -5..10 dB, 10 clean/noise pairs: max error {:.2e} dB (tol 1e-6)", worst)};
}

// ---- 7 ---------------------------------------------------------------------------

Outcome overfit() {
  auto pair = synth_toy_pair(ToyKind::kTones, ToyNoise::kWhite, 0.0, 7);
  PairBatch batch{{pair.noisy}, {pair.clean}, {0.0}};
  GldNet<float> net(ModelConfig::tiny(), 7);
  TrainConfig cfg;
  cfg.lr = 2e-4;
  cfg.batch = 1;
  cfg.max_steps = 500;
  Trainer<float> trainer(net, cfg);
  const double initial = trainer.train_mode_loss(batch);
  double last = 0.0;
  for (int step = 0; step < 500; ++step) last = trainer.train_step(batch);
  const double final_loss = trainer.train_mode_loss(batch);
  const double ratio = final_loss / initial;
  return {ratio <= 0.1, fmt::format("500 Adam steps (lr 2e-4, batch 1): MSE {:.4e} -> {:.4e}, ratio {:.3f} "
                                    "(want <= 0.10; last step loss {:.4e})",
                                    initial, final_loss, ratio, last)};
}

// ---- 8 ---------------------------------------------------------------------------

constexpr std::size_t kToyBatch = 4;

Outcome toy_enhancement() {
  const ToySource train(ToyKind::kTones, ToyNoise::kWhite, 0.0, 10'000, 1'000'000);
  const ToySource val(ToyKind::kTones, ToyNoise::kWhite, 0.0, 20'000'000, 8);
  const ToySource test(ToyKind::kTones, ToyNoise::kWhite, 0.0, 30'000'000, 50);
  GldNet<float> net(ModelConfig::tiny(), 8);
  TrainConfig cfg;
  cfg.lr = 2e-4;
  cfg.batch = kToyBatch;
  cfg.max_steps = 3000;
  cfg.eval_every = 250;
  cfg.seed = 8;
  const auto dir = fs::temp_directory_path() / "gldnet_acceptance_toy";
  fs::remove_all(dir);
  Trainer<float> trainer(net, cfg);
  FitOptions options;
  options.out_dir = dir.string();
  options.on_record = [](const LogRecord& r) {
    fmt::print("    step {:4d}  train {:.5f}  val {:.5f}{}\n", r.step, r.train_loss, r.val_loss, r.best ? "  *" : "");
    std::fflush(stdout);
  };
  trainer.fit(train, val, options);
  load_model(net, read_checkpoint((dir / "best.ckpt").string()));

  double gain = 0.0;
  std::size_t stoi_better = 0;
  for (std::size_t i = 0; i < 50; ++i) {
    auto m = test.pair(i);
    Tensor<float> x(Shape{1, m.noisy.samples.size()});
    for (std::size_t k = 0; k < x.size(); ++k) x[k] = static_cast<float>(m.noisy.samples[k]);
    auto y = net.forward(x, Mode::kEval);
    std::vector<double> enhanced(y.data().begin(), y.data().end());
    gain += si_sdr(m.clean.samples, enhanced) - si_sdr(m.clean.samples, m.noisy.samples);
    stoi_better += stoi(m.clean.samples, enhanced) > stoi(m.clean.samples, m.noisy.samples);
  }
  gain /= 50.0;
  return {gain >= 3.0 && stoi_better >= 40,
          fmt::format("3000 steps, batch {}: mean SI-SDR gain {:.2f} dB (want >= 3), STOI improved on {}/50 "
                      "(want >= 40)",
                      kToyBatch, gain, stoi_better)};
}

// ---- 9 ---------------------------------------------------------------------------

Outcome ablations() {
  auto batch = ToySource(ToyKind::kTones, ToyNoise::kWhite, 0.0, 90, 4).sample(1, 9);
  std::size_t count[2][2] = {};
  std::string losses;
  for (int sb = 0; sb < 2; ++sb) {
    for (int ib = 0; ib < 2; ++ib) {
      auto cfg = ModelConfig::tiny();
      cfg.enable_sb = sb;
      cfg.enable_ib = ib;
      GldNet<float> net(cfg, 9);
      count[sb][ib] = parameter_count(net.parameters());
      if (sb && ib) continue;
      TrainConfig tc;
      tc.batch = 1;
      Trainer<float> trainer(net, tc);
      const double loss = trainer.train_step(batch);
      if (!std::isfinite(loss)) return {false, "non-finite loss in an ablation variant"};
    }
  }
  const bool order = count[1][1] > count[1][0] && count[1][0] > count[0][0] && count[1][1] > count[0][1];
  return {order, fmt::format("params full {} > w/o IB {} > w/o SB+IB {}; full > w/o SB {}; each variant "
                             "trained one step",
                             count[1][1], count[1][0], count[0][0], count[0][1])};
}

// ---- 10 ---------------------------------------------------------------------------

Outcome metric_sanity() {
  std::mt19937_64 rng(10);
  auto pair = synth_toy_pair(ToyKind::kChirp, ToyNoise::kWhite, 5.0, 10);
  const double self = stoi(pair.clean.samples, pair.clean.samples);
  double drift = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    auto ref = uniform(4000, rng), est = uniform(4000, rng);
    for (std::size_t i = 0; i < est.size(); ++i) est[i] += 2.0 * ref[i];
    const double base = si_sdr(ref, est);
    std::vector<double> scaled(est);
    const double k = std::exp(uniform(1, rng, -3.0, 3.0)[0]);
    for (auto& v : scaled) v *= k;
    drift = std::max(drift, std::abs(si_sdr(ref, scaled) - base));
  }
  MetricReport report;
  for (double c : {-5.0, 0.0, 5.0, 10.0}) {
    for (auto m : kAllMetrics) {
      report.add({"u", "Unprocessed", c, m, 0.5});
      report.add({"u", "GLD-Net", c, m, 0.6});
    }
  }
  const auto table = report.table();
  std::istringstream in(table);
  std::string header, snr, first_row;
  std::getline(in, header);
  std::getline(in, snr);
  std::getline(in, first_row);
  std::vector<std::string> tokens;
  std::istringstream cols(snr.rfind("Test SNR", 0) == 0 ? snr.substr(8) : "");
  for (std::string tok; cols >> tok;) {
    if (tok != "|") tokens.push_back(tok.front() == '|' ? tok.substr(1) : tok);
  }
  const std::vector<std::string> block{"-5", "0", "5", "10", "Avg."};
  bool layout = tokens.size() == 15 && first_row.rfind("Unprocessed", 0) == 0 &&
                header.find("SI-SDR") != std::string::npos && header.find("segSNR") != std::string::npos &&
                header.find("STOI") != std::string::npos;
  for (std::size_t i = 0; layout && i < 15; ++i) layout = tokens[i] == block[i % 5];
  const bool pass = self >= 0.999 && drift <= 1e-9 && layout;
  return {pass, fmt::format("stoi(x,x) = {:.6f} (>= 0.999); SI-SDR scale drift {:.1e} (<= 1e-9); table layout {}",
                            self, drift, layout ? "ok" : "WRONG")};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria{
      {1, "attention normalization", 1, attention_rows},
      {2, "zero-init degeneracy", 1, zero_init_degeneracy},
      {3, "gradient correctness", 300, gradients},
      {4, "STFT fidelity", 10, stft_fidelity},
      {5, "learnable-decoder equivalence", 10, decoder_equivalence},
      {6, "mixture SNR exactness", 1, mixture_snr},
      {7, "overfit convergence", 600, overfit},
      {8, "toy enhancement gain", 7200, toy_enhancement},
      {9, "ablation structure", 60, ablations},
      {10, "metric sanity", 30, metric_sanity},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::stoi(argv[i]));

  int failed = 0;
  for (const auto& c : criteria) {
    if (!selected.empty() && !selected.count(c.id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = secs <= c.limit_s;
    const bool pass = out.pass && in_time;
    failed += !pass;
    fmt::print("[{}] {:2d} {}: {}; {:.1f} s (limit {:.0f} s){}\n", pass ? "PASS" : "FAIL", c.id, c.name, out.detail,
               secs, c.limit_s, in_time ? "" : " EXCEEDED");
    std::fflush(stdout);
  }
  return failed ? 1 : 0;
}

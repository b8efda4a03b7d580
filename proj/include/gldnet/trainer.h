// Copyright 2026 The GLD-Net Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <string>

#include "gldnet/adam.h"
#include "gldnet/checkpoint.h"
#include "gldnet/config.h"
#include "gldnet/data.h"
#include "gldnet/network.h"

namespace gldnet {

struct TrainConfig {
  double lr = 2e-4;
  std::size_t batch = 16;
  std::size_t max_steps = 1000;
  std::size_t eval_every = 100;
  std::uint64_t seed = 0;
  int precision = 32;
  std::optional<double> grad_clip;  // max global L2 norm
  std::size_t crop_len = 16000;
  std::size_t val_pairs = 8;

  void validate() const;  // throws ConfigError

  // train.* keys; train.grad_clip = 0 means off.
  void read(ConfigReader& reader);
  void write(KeyValues& kv) const;
};

// Source of (noisy, clean) training pairs. sample() must be a pure function
// of its arguments.
class PairSource {
 public:
  virtual ~PairSource() = default;
  virtual PairBatch sample(std::size_t batch, std::uint64_t seed) const = 0;
};

class ManifestSource : public PairSource {
 public:
  ManifestSource(Manifest manifest, std::size_t crop_len);
  PairBatch sample(std::size_t batch, std::uint64_t seed) const override;

 private:
  Manifest manifest_;
  std::size_t crop_len_;
  mutable std::map<std::size_t, Mixture> cache_;
};

// Seeded toy corpus: pair i is synth_toy_pair(kind, noise, snr, first_seed + i)
// for i < pairs.
class ToySource : public PairSource {
 public:
  ToySource(ToyKind kind, ToyNoise noise, double snr_db, std::uint64_t first_seed, std::size_t pairs,
            std::size_t length = 16000);
  PairBatch sample(std::size_t batch, std::uint64_t seed) const override;
  // All pairs in index order.
  PairBatch all() const;
  Mixture pair(std::size_t i) const;

 private:
  ToyKind kind_;
  ToyNoise noise_;
  double snr_db_;
  std::uint64_t first_seed_;
  std::size_t pairs_;
  std::size_t length_;
};

template <typename T>
Tensor<T> stack_waveforms(const std::vector<Waveform>& waves);

struct LogRecord {
  std::uint64_t step = 0;
  double train_loss = 0.0;  // mean over the steps since the previous record
  double val_loss = 0.0;
  bool best = false;
};

struct FitOptions {
  std::string out_dir;               // empty: no files written
  std::ostream* log = nullptr;       // JSON lines, also appended to out_dir/train_log.jsonl
  std::function<void(const LogRecord&)> on_record;
};

struct FitResult {
  std::vector<LogRecord> records;
  std::optional<double> best_val_loss;
  std::uint64_t best_step = 0;
};

// Checkpoint assembly and restore. Tensor names: "param/<name>",
// "buffer/<name>", "adam.m/<name>", "adam.v/<name>".
ModelConfig model_config_from(const CheckpointData& data);
TrainConfig train_config_from(const CheckpointData& data);

template <typename T>
void load_model(GldNet<T>& model, const CheckpointData& data);

template <typename T>
class Trainer {
 public:
  Trainer(GldNet<T>& model, TrainConfig cfg);

  // forward, MSE, backward, optional clipping, Adam. Throws NumericError
  // naming the first non-finite tensor; parameters are untouched then.
  double train_step(const PairBatch& batch);
  // Eval-mode MSE without recording a graph.
  double evaluate(const PairBatch& batch);
  // Train-mode MSE without updating anything (batch statistics in use).
  double train_mode_loss(const PairBatch& batch);

  // Runs until max_steps. Batch k is train.sample(batch, mix(seed, k)), so a
  // resumed run sees the same data as an uninterrupted one.
  FitResult fit(const PairSource& train, const PairSource& val, const FitOptions& options);

  CheckpointData checkpoint() const;
  // Restores parameters, buffers, optimizer moments and the step counter.
  void restore(const CheckpointData& data);

  std::uint64_t step() const { return step_; }
  const TrainConfig& config() const { return cfg_; }
  GldNet<T>& model() { return model_; }

 private:
  GldNet<T>& model_;
  TrainConfig cfg_;
  ParameterList<T> params_;
  AdamState<T> adam_;
  std::uint64_t step_ = 0;
  std::optional<double> best_val_;
  std::uint64_t best_step_ = 0;
};

// Per-step data seed.
std::uint64_t step_seed(std::uint64_t seed, std::uint64_t step);

}  // namespace gldnet

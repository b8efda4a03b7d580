// Copyright 2026 The GLD-Net Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "gldnet/trainer.h"

#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "gldnet/error.h"
#include "gldnet/graph.h"
#include "gldnet/ops.h"

namespace gldnet {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

constexpr std::uint64_t kValidationStream = 0x76616C6964ull;

template <typename T>
bool all_finite(std::span<const T> v) {
  for (T x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

std::string format_double(double v) {
  std::ostringstream ss;
  ss.precision(17);
  ss << v;
  return ss.str();
}

}  // namespace

std::uint64_t step_seed(std::uint64_t seed, std::uint64_t step) {
  return splitmix64(splitmix64(seed) ^ step);
}

// ---- config ------------------------------------------------------------------

void TrainConfig::validate() const {
  if (!(lr > 0.0) || !std::isfinite(lr)) throw ConfigError("train.lr must be positive");
  if (batch == 0) throw ConfigError("train.batch must be at least 1");
  if (eval_every == 0) throw ConfigError("train.eval_every must be at least 1");
  if (precision != 32 && precision != 64) throw ConfigError("train.precision must be 32 or 64");
  if (grad_clip && !(*grad_clip > 0.0)) throw ConfigError("train.grad_clip must be positive");
  if (crop_len == 0) throw ConfigError("train.crop_len must be positive");
  if (val_pairs == 0) throw ConfigError("train.val_pairs must be at least 1");
}

void TrainConfig::read(ConfigReader& r) {
  lr = r.get_double("train.lr", lr);
  batch = r.get_size("train.batch", batch);
  max_steps = r.get_size("train.max_steps", max_steps);
  eval_every = r.get_size("train.eval_every", eval_every);
  seed = r.get_u64("train.seed", seed);
  precision = static_cast<int>(r.get_size("train.precision", static_cast<std::size_t>(precision)));
  const double clip = r.get_double("train.grad_clip", grad_clip.value_or(0.0));
  grad_clip = clip > 0.0 ? std::optional<double>(clip) : std::nullopt;
  if (clip < 0.0) throw ConfigError("train.grad_clip must be positive, or 0 for off");
  crop_len = r.get_size("train.crop_len", crop_len);
  val_pairs = r.get_size("train.val_pairs", val_pairs);
}

void TrainConfig::write(KeyValues& kv) const {
  kv["train.lr"] = format_double(lr);
  kv["train.batch"] = std::to_string(batch);
  kv["train.max_steps"] = std::to_string(max_steps);
  kv["train.eval_every"] = std::to_string(eval_every);
  kv["train.seed"] = std::to_string(seed);
  kv["train.precision"] = std::to_string(precision);
  kv["train.grad_clip"] = format_double(grad_clip.value_or(0.0));
  kv["train.crop_len"] = std::to_string(crop_len);
  kv["train.val_pairs"] = std::to_string(val_pairs);
}

// ---- data sources --------------------------------------------------------------

ManifestSource::ManifestSource(Manifest manifest, std::size_t crop_len)
    : manifest_(std::move(manifest)), crop_len_(crop_len) {
  if (manifest_.items.empty()) throw ContractError("manifest for split '" + manifest_.split + "' is empty");
}

PairBatch ManifestSource::sample(std::size_t batch, std::uint64_t seed) const {
  return sample_batch(manifest_, batch, seed, crop_len_, &cache_);
}

ToySource::ToySource(ToyKind kind, ToyNoise noise, double snr_db, std::uint64_t first_seed,
                     std::size_t pairs, std::size_t length)
    : kind_(kind), noise_(noise), snr_db_(snr_db), first_seed_(first_seed), pairs_(pairs), length_(length) {
  if (pairs_ == 0) throw ContractError("toy corpus needs at least one pair");
}

Mixture ToySource::pair(std::size_t i) const {
  return synth_toy_pair(kind_, noise_, snr_db_, first_seed_ + i, length_);
}

PairBatch ToySource::sample(std::size_t batch, std::uint64_t seed) const {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, pairs_ - 1);
  PairBatch out;
  for (std::size_t b = 0; b < batch; ++b) {
    auto m = pair(pick(rng));
    out.noisy.push_back(std::move(m.noisy));
    out.clean.push_back(std::move(m.clean));
    out.snr_db.push_back(snr_db_);
  }
  return out;
}

PairBatch ToySource::all() const {
  PairBatch out;
  for (std::size_t i = 0; i < pairs_; ++i) {
    auto m = pair(i);
    out.noisy.push_back(std::move(m.noisy));
    out.clean.push_back(std::move(m.clean));
    out.snr_db.push_back(snr_db_);
  }
  return out;
}

template <typename T>
Tensor<T> stack_waveforms(const std::vector<Waveform>& waves) {
  if (waves.empty()) throw ContractError("empty batch");
  const std::size_t s = waves[0].samples.size();
  Tensor<T> out(Shape{waves.size(), s});
  for (std::size_t b = 0; b < waves.size(); ++b) {
    if (waves[b].samples.size() != s) {
      throw DimensionError("batch item " + std::to_string(b) + " has " +
                           std::to_string(waves[b].samples.size()) + " samples, expected " + std::to_string(s));
    }
    for (std::size_t i = 0; i < s; ++i) out[b * s + i] = static_cast<T>(waves[b].samples[i]);
  }
  return out;
}

// ---- checkpoints ---------------------------------------------------------------

namespace {

KeyValues keys_with_prefixes(const KeyValues& kv, std::initializer_list<const char*> prefixes) {
  KeyValues out;
  for (const auto& [k, v] : kv) {
    for (const char* p : prefixes) {
      if (k.rfind(p, 0) == 0) out.emplace(k, v);
    }
  }
  return out;
}

}  // namespace

ModelConfig model_config_from(const CheckpointData& data) {
  ConfigReader reader(keys_with_prefixes(data.config, {"model.", "stft."}));
  ModelConfig cfg;
  cfg.read(reader);
  reader.reject_unknown();
  cfg.validate();
  return cfg;
}

TrainConfig train_config_from(const CheckpointData& data) {
  ConfigReader reader(keys_with_prefixes(data.config, {"train."}));
  TrainConfig cfg;
  cfg.read(reader);
  reader.reject_unknown();
  cfg.validate();
  return cfg;
}

template <typename T>
void load_model(GldNet<T>& model, const CheckpointData& data) {
  auto params = model.parameters();
  auto buffers = model.buffers();
  import_tensors(params, "param/", data);
  import_tensors(buffers, "buffer/", data);
}

// ---- trainer ---------------------------------------------------------------------

template <typename T>
Trainer<T>::Trainer(GldNet<T>& model, TrainConfig cfg)
    : model_(model), cfg_(std::move(cfg)), params_(model.parameters()) {
  cfg_.validate();
  if (cfg_.precision != static_cast<int>(8 * sizeof(T))) {
    throw ConfigError("train.precision " + std::to_string(cfg_.precision) + " does not match a " +
                      std::to_string(8 * sizeof(T)) + "-bit model");
  }
  adam_.lr = cfg_.lr;
}

template <typename T>
double Trainer<T>::train_step(const PairBatch& batch) {
  auto noisy = stack_waveforms<T>(batch.noisy);
  auto clean = stack_waveforms<T>(batch.clean);
  for (auto& p : params_) p.tensor.clear_grad();

  Graph<T> graph;
  auto locate = [&]() {
    if (!all_finite<T>(noisy.data()) || !all_finite<T>(clean.data())) return std::string("input batch");
    for (const auto& p : params_) {
      if (!all_finite<T>(p.tensor.data())) return "parameter '" + p.name + "'";
    }
    return graph.first_non_finite().value_or("loss");
  };
  const std::string prefix = "step " + std::to_string(step_ + 1) + ": ";
  Tensor<T> loss;
  try {
    auto scope = graph.activate();
    loss = mse_loss(model_.forward(noisy, Mode::kTrain), clean);
  } catch (const NumericError& e) {
    throw NumericError(prefix + e.what() + "; first non-finite tensor: " + locate());
  }
  const double value = static_cast<double>(loss[0]);
  if (!std::isfinite(value)) {
    throw NumericError(prefix + "loss is " + format_double(value) + "; first non-finite tensor: " + locate());
  }
  graph.backward(loss);
  if (cfg_.grad_clip) clip_grad_norm(params_, *cfg_.grad_clip);
  try {
    adam_step(params_, adam_);
  } catch (const NumericError& e) {
    throw NumericError(prefix + e.what());
  }
  ++step_;
  return value;
}

template <typename T>
double Trainer<T>::evaluate(const PairBatch& batch) {
  auto noisy = stack_waveforms<T>(batch.noisy);
  auto clean = stack_waveforms<T>(batch.clean);
  return static_cast<double>(mse_loss(model_.forward(noisy, Mode::kEval), clean)[0]);
}

template <typename T>
double Trainer<T>::train_mode_loss(const PairBatch& batch) {
  // Train mode also moves the running statistics; keep them as they were.
  auto buffers = model_.buffers();
  std::vector<std::vector<T>> saved;
  for (const auto& b : buffers) saved.emplace_back(b.tensor.data().begin(), b.tensor.data().end());
  auto noisy = stack_waveforms<T>(batch.noisy);
  auto clean = stack_waveforms<T>(batch.clean);
  const double value = static_cast<double>(mse_loss(model_.forward(noisy, Mode::kTrain), clean)[0]);
  for (std::size_t i = 0; i < buffers.size(); ++i) {
    std::copy(saved[i].begin(), saved[i].end(), buffers[i].tensor.data().begin());
  }
  return value;
}

template <typename T>
CheckpointData Trainer<T>::checkpoint() const {
  CheckpointData data;
  data.precision = static_cast<std::uint32_t>(8 * sizeof(T));
  data.step = step_;
  model_.config().write(data.config);
  cfg_.write(data.config);
  if (best_val_) {
    data.config["state.best_val_loss"] = format_double(*best_val_);
    data.config["state.best_step"] = std::to_string(best_step_);
  }
  export_tensors(params_, "param/", data);
  export_tensors(model_.buffers(), "buffer/", data);
  if (!adam_.first_moment.empty()) {
    for (std::size_t i = 0; i < params_.size(); ++i) {
      const auto& shape = params_[i].tensor.shape();
      const auto& m = adam_.first_moment[i];
      const auto& v = adam_.second_moment[i];
      data.tensors.push_back({"adam.m/" + params_[i].name, shape, {m.begin(), m.end()}});
      data.tensors.push_back({"adam.v/" + params_[i].name, shape, {v.begin(), v.end()}});
    }
  }
  return data;
}

template <typename T>
void Trainer<T>::restore(const CheckpointData& data) {
  if (data.precision != 8 * sizeof(T)) {
    throw FormatError("checkpoint holds " + std::to_string(data.precision) + "-bit tensors, model is " +
                      std::to_string(8 * sizeof(T)) + "-bit");
  }
  load_model(model_, data);
  AdamState<T> adam;
  adam.lr = cfg_.lr;
  adam.step = data.step;
  if (data.find("adam.m/" + params_.front().name)) {
    for (const auto& p : params_) {
      const auto* m = data.find("adam.m/" + p.name);
      const auto* v = data.find("adam.v/" + p.name);
      if (!m || !v || m->shape != p.tensor.shape() || v->shape != p.tensor.shape()) {
        throw FormatError("checkpoint optimizer state for " + p.name + " is missing or mis-shaped");
      }
      adam.first_moment.emplace_back(m->values.begin(), m->values.end());
      adam.second_moment.emplace_back(v->values.begin(), v->values.end());
    }
  }
  adam_ = std::move(adam);
  step_ = data.step;
  best_val_.reset();
  best_step_ = 0;
  if (auto it = data.config.find("state.best_val_loss"); it != data.config.end()) {
    best_val_ = std::stod(it->second);
    best_step_ = std::stoull(data.config.at("state.best_step"));
  }
}

template <typename T>
FitResult Trainer<T>::fit(const PairSource& train, const PairSource& val, const FitOptions& options) {
  std::ofstream file;
  if (!options.out_dir.empty()) {
    std::filesystem::create_directories(options.out_dir);
    const auto path = options.out_dir + "/train_log.jsonl";
    file.open(path, std::ios::app);
    if (!file) throw IoError("cannot write training log " + path);
  }
  const auto val_batch = val.sample(cfg_.val_pairs, step_seed(cfg_.seed ^ kValidationStream, 0));

  FitResult result;
  double acc = 0.0;
  std::size_t count = 0;
  while (step_ < cfg_.max_steps) {
    acc += train_step(train.sample(cfg_.batch, step_seed(cfg_.seed, step_)));
    ++count;
    if (step_ % cfg_.eval_every != 0) continue;

    LogRecord rec;
    rec.step = step_;
    rec.train_loss = acc / static_cast<double>(count);
    rec.val_loss = evaluate(val_batch);
    if (!std::isfinite(rec.val_loss)) {
      throw NumericError("step " + std::to_string(step_) + ": validation loss is not finite");
    }
    rec.best = !best_val_ || rec.val_loss < *best_val_;
    if (rec.best) {
      best_val_ = rec.val_loss;
      best_step_ = step_;
    }
    acc = 0.0;
    count = 0;

    nlohmann::json j{{"step", rec.step}, {"train_loss", rec.train_loss}, {"val_loss", rec.val_loss},
                     {"best", rec.best}};
    const std::string line = j.dump();
    if (file.is_open()) file << line << '\n' << std::flush;
    if (options.log) *options.log << line << '\n' << std::flush;
    if (!options.out_dir.empty()) {
      const auto data = checkpoint();
      if (rec.best) write_checkpoint(options.out_dir + "/best.ckpt", data);
      write_checkpoint(options.out_dir + "/last.ckpt", data);
    }
    if (options.on_record) options.on_record(rec);
    result.records.push_back(rec);
  }
  result.best_val_loss = best_val_;
  result.best_step = best_step_;
  return result;
}

template Tensor<float> stack_waveforms(const std::vector<Waveform>&);
template Tensor<double> stack_waveforms(const std::vector<Waveform>&);
template void load_model(GldNet<float>&, const CheckpointData&);
template void load_model(GldNet<double>&, const CheckpointData&);
template class Trainer<float>;
template class Trainer<double>;

}  // namespace gldnet

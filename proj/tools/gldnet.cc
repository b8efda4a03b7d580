// Copyright 2026 The GLD-Net Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
//
// gldnet: train, enhance, evaluate, gradcheck.

#include <CLI11.hpp>
#include <fmt/core.h>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "gldnet/checkpoint.h"
#include "gldnet/config.h"
#include "gldnet/data.h"
#include "gldnet/error.h"
#include "gldnet/metrics.h"
#include "gldnet/network.h"
#include "gldnet/signal.h"
#include "gldnet/trainer.h"
#include "gldnet/verify.h"

namespace fs = std::filesystem;
using namespace gldnet;

namespace {

enum Exit : int {
  kOk = 0,
  kFailure = 1,
  kUsage = 2,
  kTrainAbort = 3,
  kCheckpoint = 4,
  kVerification = 5,
};

// Exceptions carrying an exit code, so each phase decides how its errors map.
struct ExitError {
  int code;
  std::string message;
};

template <typename F>
auto phase(int code, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const ExitError&) {
    throw;
  } catch (const std::exception& e) {
    throw ExitError{code, e.what()};
  }
}

// Flags shared by train and gradcheck; all of them end up as config keys.
struct ModelFlags {
  std::string config_path;
  std::string preset;
  std::optional<std::uint64_t> seed;
  std::optional<int> precision;
  std::optional<std::size_t> max_steps;
  bool toy_data = false;
  bool disable_sb = false;
  bool disable_ib = false;
  std::optional<bool> literal_eq2;
  std::optional<bool> literal_eq5;
  std::optional<std::string> attention_scale;
  std::vector<std::string> overrides;

  void attach(CLI::App& app, const std::string& default_preset) {
    preset = default_preset;
    app.add_option("--config", config_path, "key = value config file")->check(CLI::ExistingFile);
    app.add_option("--preset", preset, "Model geometry")->check(CLI::IsMember({"tiny", "full"}));
    app.add_option("--seed", seed, "Seed for initialization and data order");
    app.add_option("--precision", precision, "Floating-point width")->check(CLI::IsMember({32, 64}));
    app.add_option("--max-steps", max_steps, "Training steps");
    app.add_flag("--toy-data", toy_data, "Train on the seeded synthetic corpus");
    app.add_flag("--disable-sb", disable_sb, "Remove the speech branch");
    app.add_flag("--disable-ib", disable_ib, "Remove the interference branch");
    app.add_flag("--literal-eq2{true}", literal_eq2,
                 "Aggregate attention in the collapsed alpha*V_j form (--literal-eq2=false: standard)");
    app.add_flag("--literal-eq5{true}", literal_eq5,
                 "Speech gate R*P (default); --literal-eq5=false uses P*E");
    app.add_option("--attention-scale", attention_scale, "Scale attention logits by 1/sqrt(T*F)")
        ->check(CLI::IsMember({"on", "off"}));
    app.add_option("overrides", overrides, "key=value settings, applied last");
  }

  // Preset defaults, then the config file, then flags, then positional overrides.
  KeyValues resolve() const {
    KeyValues kv;
    ModelConfig::preset(preset).write(kv);
    TrainConfig{}.write(kv);
    if (!config_path.empty()) {
      for (auto& [k, v] : read_config_file(config_path)) kv[k] = v;
    }
    if (seed) kv["train.seed"] = std::to_string(*seed);
    if (precision) kv["train.precision"] = std::to_string(*precision);
    if (max_steps) kv["train.max_steps"] = std::to_string(*max_steps);
    if (disable_sb) kv["model.enable_sb"] = "false";
    if (disable_ib) kv["model.enable_ib"] = "false";
    if (literal_eq2) kv["model.literal_aggregation"] = *literal_eq2 ? "true" : "false";
    if (literal_eq5) kv["model.literal_speech_mask"] = *literal_eq5 ? "true" : "false";
    if (attention_scale) kv["model.attention_scale"] = *attention_scale == "on" ? "true" : "false";
    for (const auto& o : overrides) {
      const auto eq = o.find('=');
      if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + o + "' is not key=value");
      kv[o.substr(0, eq)] = o.substr(eq + 1);
    }
    return kv;
  }
};

struct DataConfig {
  std::string train_manifest;
  std::string val_manifest;
  std::string toy_kind = "tones";
  std::string toy_noise = "white";
  double toy_snr = 0.0;
  std::size_t toy_pairs = 64;

  void read(ConfigReader& r) {
    train_manifest = r.get_string("data.train_manifest", train_manifest);
    val_manifest = r.get_string("data.val_manifest", val_manifest);
    toy_kind = r.get_string("data.toy_kind", toy_kind);
    toy_noise = r.get_string("data.toy_noise", toy_noise);
    toy_snr = r.get_double("data.toy_snr", toy_snr);
    toy_pairs = r.get_size("data.toy_pairs", toy_pairs);
  }
};

// ---- train -----------------------------------------------------------------------

struct TrainArgs {
  ModelFlags flags;
  std::string out_dir = "run";
  std::string resume;
};

template <typename T>
int run_train(const ModelConfig& model_cfg, const TrainConfig& train_cfg, const PairSource& train,
              const PairSource& val, const TrainArgs& args, const KeyValues& resolved) {
  GldNet<T> model(model_cfg, train_cfg.seed);
  Trainer<T> trainer(model, train_cfg);
  if (!args.resume.empty()) {
    phase(kCheckpoint, [&] {
      auto data = read_checkpoint(args.resume);
      if (model_config_from(data).freq_bins() != model_cfg.freq_bins()) {
        throw FormatError("checkpoint geometry does not match the configured model");
      }
      trainer.restore(data);
    });
    fmt::print(stderr, "resumed from {} at step {}\n", args.resume, trainer.step());
  }
  phase(kCheckpoint, [&] {
    fs::create_directories(args.out_dir);
    std::ofstream(fs::path(args.out_dir) / "config.txt") << format_key_values(resolved);
  });
  FitResult result;
  try {
    result = trainer.fit(train, val, {args.out_dir, &std::cout, {}});
  } catch (const NumericError& e) {
    throw ExitError{kTrainAbort, std::string("training aborted: ") + e.what()};
  } catch (const Error& e) {
    throw ExitError{kCheckpoint, e.what()};
  }
  if (result.best_val_loss) {
    fmt::print(stderr, "done: {} steps, best validation loss {:.6g} at step {}\n", trainer.step(),
               *result.best_val_loss, result.best_step);
  } else {
    fmt::print(stderr, "done: {} steps, no validation interval reached\n", trainer.step());
  }
  return kOk;
}

int cmd_train(const TrainArgs& args) {
  ModelConfig model_cfg;
  TrainConfig train_cfg;
  DataConfig data_cfg;
  KeyValues resolved;
  std::unique_ptr<PairSource> train, val;
  phase(kUsage, [&] {
    resolved = args.flags.resolve();
    ConfigReader r(resolved);
    model_cfg.read(r);
    train_cfg.read(r);
    data_cfg.read(r);
    r.reject_unknown();
    model_cfg.validate();
    train_cfg.validate();
    if (args.flags.toy_data) {
      const auto kind = parse_toy_kind(data_cfg.toy_kind);
      const auto noise = parse_toy_noise(data_cfg.toy_noise);
      const std::uint64_t base = train_cfg.seed * 1000003u;
      train = std::make_unique<ToySource>(kind, noise, data_cfg.toy_snr, base, data_cfg.toy_pairs,
                                          train_cfg.crop_len);
      val = std::make_unique<ToySource>(kind, noise, data_cfg.toy_snr, base + 500000, train_cfg.val_pairs,
                                        train_cfg.crop_len);
    } else {
      if (data_cfg.train_manifest.empty() || data_cfg.val_manifest.empty()) {
        throw ConfigError("set data.train_manifest and data.val_manifest, or pass --toy-data");
      }
      auto tm = read_manifest(data_cfg.train_manifest, "train");
      auto vm = read_manifest(data_cfg.val_manifest, "val");
      check_split_hygiene({tm, vm});
      train = std::make_unique<ManifestSource>(std::move(tm), train_cfg.crop_len);
      val = std::make_unique<ManifestSource>(std::move(vm), train_cfg.crop_len);
    }
  });
  if (train_cfg.precision == 64) return run_train<double>(model_cfg, train_cfg, *train, *val, args, resolved);
  return run_train<float>(model_cfg, train_cfg, *train, *val, args, resolved);
}

// ---- enhance / evaluate ------------------------------------------------------------

// A loaded checkpoint at whichever precision it was written in.
class Enhancer {
 public:
  explicit Enhancer(const std::string& path) {
    phase(kCheckpoint, [&] {
      auto data = read_checkpoint(path);
      auto cfg = model_config_from(data);
      if (data.precision == 64) {
        wide_.emplace(cfg, 0);
        load_model(*wide_, data);
      } else {
        narrow_.emplace(cfg, 0);
        load_model(*narrow_, data);
      }
    });
  }

  std::vector<double> run(const std::vector<double>& samples) {
    return narrow_ ? run(*narrow_, samples) : run(*wide_, samples);
  }

 private:
  template <typename T>
  static std::vector<double> run(GldNet<T>& net, const std::vector<double>& samples) {
    Tensor<T> x(Shape{1, samples.size()});
    for (std::size_t i = 0; i < samples.size(); ++i) x[i] = static_cast<T>(samples[i]);
    auto y = net.forward(x, Mode::kEval);
    return {y.data().begin(), y.data().end()};
  }

  std::optional<GldNet<float>> narrow_;
  std::optional<GldNet<double>> wide_;
};

int cmd_enhance(const std::string& checkpoint, const std::string& in, const std::string& out) {
  Enhancer enhancer(checkpoint);
  auto wav = phase(kUsage, [&] {
    auto w = read_wav(in);
    if (w.sample_rate != kSampleRate) {
      throw ConfigError(in + " is sampled at " + std::to_string(w.sample_rate) + " Hz; the model expects " +
                        std::to_string(kSampleRate) + " Hz");
    }
    return w;
  });
  Waveform enhanced{phase(kUsage, [&] { return enhancer.run(wav.samples); }), wav.sample_rate};
  phase(kFailure, [&] { write_wav(out, enhanced); });
  return kOk;
}

struct EvaluateArgs {
  std::string checkpoint;
  std::string manifest;
  std::string split = "test";
  std::string out_dir = ".";
  std::string system = "GLD-Net";
};

int cmd_evaluate(const EvaluateArgs& args) {
  auto manifest = phase(kUsage, [&] {
    auto m = read_manifest(args.manifest, args.split);
    if (m.items.empty()) throw ConfigError("manifest " + args.manifest + " lists no utterances");
    return m;
  });
  Enhancer enhancer(args.checkpoint);
  MetricReport report;
  for (std::size_t i = 0; i < manifest.items.size(); ++i) {
    const auto& spec = manifest.items[i];
    auto mix = phase(kUsage, [&] { return load_mixture(spec); });
    auto enhanced = phase(kUsage, [&] { return enhancer.run(mix.noisy.samples); });
    const auto id = fmt::format("{}:{}", i, fs::path(spec.clean_path).filename().string());
    const auto& clean = mix.clean.samples;
    auto score = [&](const std::string& system, const std::vector<double>& est) {
      report.add({id, system, spec.snr_db, Metric::kSiSdr, si_sdr(clean, est)});
      report.add({id, system, spec.snr_db, Metric::kSegSnr, seg_snr(clean, est)});
      try {
        report.add({id, system, spec.snr_db, Metric::kStoi, stoi(clean, est)});
      } catch (const ContractError& e) {
        fmt::print(stderr, "{}: STOI skipped: {}\n", id, e.what());
      }
    };
    score("Unprocessed", mix.noisy.samples);
    score(args.system, enhanced);
  }
  const auto table = report.table();
  std::cout << table;
  phase(kFailure, [&] {
    fs::create_directories(args.out_dir);
    std::ofstream(fs::path(args.out_dir) / "eval_records.tsv") << report.records_text();
    std::ofstream(fs::path(args.out_dir) / "eval_table.txt") << table;
  });
  return kOk;
}

// ---- gradcheck -------------------------------------------------------------------------

struct GradcheckArgs {
  ModelFlags flags;
  double tolerance = 1e-4;
  double fraction = 0.01;
  std::size_t frames = 4;
};

int cmd_gradcheck(const GradcheckArgs& args) {
  ModelConfig model_cfg;
  TrainConfig train_cfg;
  phase(kUsage, [&] {
    ConfigReader r(args.flags.resolve());
    model_cfg.read(r);
    train_cfg.read(r);
    r.reject_unknown();
    model_cfg.validate();
    if (train_cfg.precision != 64 && args.flags.precision) {
      throw ConfigError("gradcheck runs in 64-bit mode only");
    }
    if (!(args.fraction > 0.0 && args.fraction <= 1.0)) throw ConfigError("--fraction must be in (0, 1]");
    if (args.frames == 0) throw ConfigError("--frames must be at least 1");
  });
  GradSuiteOptions opt;
  opt.seed = train_cfg.seed;
  opt.sample_fraction = args.fraction;
  opt.frames = args.frames;
  auto lines = phase(kUsage, [&] { return run_grad_suite(model_cfg, opt); });

  std::size_t failed = 0;
  double worst = 0.0;
  fmt::print("{:<56} {:>8} {:>12}\n", "component", "checked", "max_rel_err");
  for (const auto& l : lines) {
    const bool ok = l.max_rel_error <= args.tolerance;
    failed += ok ? 0 : 1;
    worst = std::max(worst, l.max_rel_error);
    fmt::print("{:<56} {:>8} {:>12.3e}{}\n", l.component, l.checked, l.max_rel_error, ok ? "" : "  FAIL");
  }
  fmt::print("{} components, max relative error {:.3e}, tolerance {:.1e}: {}\n", lines.size(), worst,
             args.tolerance, failed ? fmt::format("{} FAILED", failed) : std::string("ok"));
  return failed ? kVerification : kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Speech enhancement with global-local dependency networks"};
  app.require_subcommand(1);

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "Train a model; writes logs and checkpoints to --out-dir");
  train.flags.attach(*train_cmd, "full");
  train_cmd->add_option("--out-dir", train.out_dir, "Output directory");
  train_cmd->add_option("--resume", train.resume, "Continue from a checkpoint")->check(CLI::ExistingFile);

  std::string ckpt, in_wav, out_wav;
  auto* enhance_cmd = app.add_subcommand("enhance", "Enhance one WAV file");
  enhance_cmd->add_option("checkpoint", ckpt)->required();
  enhance_cmd->add_option("input", in_wav)->required();
  enhance_cmd->add_option("output", out_wav)->required();

  EvaluateArgs eval;
  auto* eval_cmd = app.add_subcommand("evaluate", "Score a checkpoint on a manifest split");
  eval_cmd->add_option("checkpoint", eval.checkpoint)->required();
  eval_cmd->add_option("manifest", eval.manifest)->required();
  eval_cmd->add_option("--split", eval.split, "Manifest split label");
  eval_cmd->add_option("--out-dir", eval.out_dir, "Where eval_records.tsv and eval_table.txt go");
  eval_cmd->add_option("--system", eval.system, "Row label for the enhanced output");

  GradcheckArgs grad;
  auto* grad_cmd = app.add_subcommand("gradcheck", "Finite-difference gradient suite in 64-bit mode");
  grad.flags.attach(*grad_cmd, "tiny");
  grad_cmd->add_option("--tol", grad.tolerance, "Maximum relative error");
  grad_cmd->add_option("--fraction", grad.fraction, "Share of each network parameter tensor checked");
  grad_cmd->add_option("--frames", grad.frames, "STFT frames in the network probe input");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*train_cmd) return cmd_train(train);
    if (*enhance_cmd) return cmd_enhance(ckpt, in_wav, out_wav);
    if (*eval_cmd) return cmd_evaluate(eval);
    if (*grad_cmd) return cmd_gradcheck(grad);
  } catch (const ExitError& e) {
    fmt::print(stderr, "error: {}\n", e.message);
    return e.code;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kFailure;
  }
  return kUsage;
}

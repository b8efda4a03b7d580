// Copyright 2026 The GLD-Net Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "gldnet/signal.h"

namespace gldnet {

// Training-set mixing conditions in dB.
inline const std::vector<double> kTrainSnrs{-5, -3, 0, 3, 5, 7, 10};

struct Mixture {
  Waveform noisy;
  Waveform clean;         // peak-normalized together with noisy
  Waveform scaled_noise;  // noisy - clean
  double gain = 1.0;        // applied to the raw noise before normalization
  double peak_scale = 1.0;  // joint factor, 1 unless noisy would clip
};

double rms(std::span<const double> x);
// 10 log10(|clean|^2 / |noise|^2).
double snr_db(std::span<const double> clean, std::span<const double> noise);

// Noise longer than clean is cropped at a seeded offset; shorter noise is tiled
// from a seeded circular offset. Throws ContractError for silent clean or noise
// or a non-finite SNR.
Mixture mix_at_snr(const Waveform& clean, const Waveform& noise, double snr_db, std::uint64_t seed = 0);

struct MixSpec {
  std::string clean_path;
  std::string noise_path;
  double snr_db = 0.0;
  std::uint64_t seed = 0;
};

struct Manifest {
  std::string split;  // train, val or test
  std::vector<MixSpec> items;
  int sample_rate = 16000;
};

// Tab-separated "clean<TAB>noise<TAB>snr_db<TAB>seed" lines; '#' comments and
// blank lines are skipped. Relative paths resolve against the manifest's
// directory. Throws IoError or FormatError with the line number.
Manifest read_manifest(const std::string& path, const std::string& split);
void write_manifest(const std::string& path, const Manifest& manifest);

// Throws ContractError naming a clean file listed under two splits.
void check_split_hygiene(const std::vector<Manifest>& manifests);

struct PairBatch {
  std::vector<Waveform> noisy;
  std::vector<Waveform> clean;
  std::vector<double> snr_db;
};

// Loads and mixes one manifest entry at full length.
Mixture load_mixture(const MixSpec& spec);

// Full-length mixtures keyed by manifest index.
using MixtureCache = std::map<std::size_t, Mixture>;

// `batch` entries drawn with replacement, each cropped at a seeded offset to
// crop_len samples (zero-padded when shorter). Deterministic in `seed`.
// Loaded mixtures are kept in `cache` when one is given.
PairBatch sample_batch(const Manifest& manifest, std::size_t batch, std::uint64_t seed,
                       std::size_t crop_len = 16000, MixtureCache* cache = nullptr);

enum class ToyKind { kTones, kChirp };
enum class ToyNoise { kWhite, kHum };

// Clean: 2 to 4 seeded sinusoids (or chirps) under an on/off envelope with at
// least 20% exact silence, mixed with the chosen noise at snr_db.
Mixture synth_toy_pair(ToyKind kind, ToyNoise noise, double snr_db, std::uint64_t seed,
                       std::size_t length = 16000);

ToyKind parse_toy_kind(const std::string& name);    // tones | chirp
ToyNoise parse_toy_noise(const std::string& name);  // white | hum

}  // namespace gldnet

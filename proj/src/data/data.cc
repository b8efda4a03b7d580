// Copyright 2026 The GLD-Net Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "gldnet/data.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "gldnet/error.h"

namespace gldnet {

namespace {

using Rng = std::mt19937_64;

std::size_t uniform_index(Rng& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

std::string resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  if (path.is_absolute()) return p;
  return (base / path).lexically_normal().string();
}

}  // namespace

double rms(std::span<const double> x) {
  if (x.empty()) return 0.0;
  double acc = 0.0;
  for (double v : x) acc += v * v;
  return std::sqrt(acc / static_cast<double>(x.size()));
}

double snr_db(std::span<const double> clean, std::span<const double> noise) {
  double pc = 0.0, pn = 0.0;
  for (double v : clean) pc += v * v;
  for (double v : noise) pn += v * v;
  return 10.0 * std::log10(pc / pn);
}

Mixture mix_at_snr(const Waveform& clean, const Waveform& noise, double snr, std::uint64_t seed) {
  if (!std::isfinite(snr)) throw ContractError("mix_at_snr: SNR must be finite");
  if (clean.sample_rate != noise.sample_rate) {
    throw ContractError("mix_at_snr: clean at " + std::to_string(clean.sample_rate) +
                        " Hz but noise at " + std::to_string(noise.sample_rate) + " Hz");
  }
  const std::size_t len = clean.samples.size();
  if (len == 0 || rms(clean.samples) == 0.0) throw ContractError("mix_at_snr: clean signal is silent");
  if (noise.samples.empty()) throw ContractError("mix_at_snr: noise signal is empty");

  Rng rng(seed);
  std::vector<double> aligned(len);
  const std::size_t nlen = noise.samples.size();
  if (nlen >= len) {
    const std::size_t offset = uniform_index(rng, nlen - len + 1);
    std::copy_n(noise.samples.begin() + static_cast<std::ptrdiff_t>(offset), len, aligned.begin());
  } else {
    const std::size_t offset = uniform_index(rng, nlen);
    for (std::size_t i = 0; i < len; ++i) aligned[i] = noise.samples[(offset + i) % nlen];
  }
  const double noise_rms = rms(aligned);
  if (noise_rms == 0.0) throw ContractError("mix_at_snr: noise segment is silent");

  Mixture m;
  m.gain = rms(clean.samples) / (noise_rms * std::pow(10.0, snr / 20.0));
  m.clean = clean;
  m.scaled_noise = Waveform{std::move(aligned), clean.sample_rate};
  m.noisy = Waveform{std::vector<double>(len), clean.sample_rate};
  double peak = 0.0;
  for (std::size_t i = 0; i < len; ++i) {
    m.scaled_noise.samples[i] *= m.gain;
    m.noisy.samples[i] = clean.samples[i] + m.scaled_noise.samples[i];
    peak = std::max(peak, std::abs(m.noisy.samples[i]));
  }
  if (peak > 1.0) {
    m.peak_scale = 1.0 / peak;
    for (auto* w : {&m.noisy, &m.clean, &m.scaled_noise}) {
      for (double& v : w->samples) v *= m.peak_scale;
    }
  }
  return m;
}

Manifest read_manifest(const std::string& path, const std::string& split) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read manifest " + path);
  const auto base = std::filesystem::path(path).parent_path();
  Manifest m;
  m.split = split;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, '\t')) fields.push_back(field);
    const std::string where = path + ":" + std::to_string(line_no);
    if (fields.size() != 4) {
      throw FormatError(where + ": expected 4 tab-separated fields, got " + std::to_string(fields.size()));
    }
    MixSpec s;
    s.clean_path = resolve(base, fields[0]);
    s.noise_path = resolve(base, fields[1]);
    try {
      std::size_t used = 0;
      s.snr_db = std::stod(fields[2], &used);
      if (used != fields[2].size() || !std::isfinite(s.snr_db)) throw std::invalid_argument("snr");
      s.seed = std::stoull(fields[3], &used);
      if (used != fields[3].size()) throw std::invalid_argument("seed");
    } catch (const std::logic_error&) {
      throw FormatError(where + ": bad SNR or seed field");
    }
    m.items.push_back(std::move(s));
  }
  return m;
}

void write_manifest(const std::string& path, const Manifest& manifest) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write manifest " + path);
  out.precision(17);
  for (const auto& s : manifest.items) {
    out << s.clean_path << '\t' << s.noise_path << '\t' << s.snr_db << '\t' << s.seed << '\n';
  }
  if (!out) throw IoError("short write to manifest " + path);
}

void check_split_hygiene(const std::vector<Manifest>& manifests) {
  std::map<std::string, std::string> owner;
  for (const auto& m : manifests) {
    for (const auto& s : m.items) {
      const auto key = std::filesystem::path(s.clean_path).lexically_normal().string();
      auto [it, inserted] = owner.emplace(key, m.split);
      if (!inserted && it->second != m.split) {
        throw ContractError("clean file " + key + " appears in both " + it->second + " and " +
                            m.split + " splits");
      }
    }
  }
}

Mixture load_mixture(const MixSpec& spec) {
  return mix_at_snr(read_wav(spec.clean_path), read_wav(spec.noise_path), spec.snr_db, spec.seed);
}

PairBatch sample_batch(const Manifest& manifest, std::size_t batch, std::uint64_t seed,
                       std::size_t crop_len, MixtureCache* cache) {
  if (manifest.items.empty()) throw ContractError("sample_batch: manifest is empty");
  if (batch == 0 || crop_len == 0) throw ContractError("sample_batch: batch and crop length must be positive");
  Rng rng(seed);
  MixtureCache local;
  MixtureCache& loaded = cache ? *cache : local;
  PairBatch out;
  for (std::size_t b = 0; b < batch; ++b) {
    const std::size_t idx = uniform_index(rng, manifest.items.size());
    auto it = loaded.find(idx);
    if (it == loaded.end()) it = loaded.emplace(idx, load_mixture(manifest.items[idx])).first;
    const Mixture& m = it->second;
    const std::size_t len = m.clean.samples.size();
    const std::size_t offset = len > crop_len ? uniform_index(rng, len - crop_len + 1) : 0;
    const std::size_t take = std::min(crop_len, len - offset);
    Waveform noisy{std::vector<double>(crop_len, 0.0), m.noisy.sample_rate};
    Waveform clean{std::vector<double>(crop_len, 0.0), m.clean.sample_rate};
    std::copy_n(m.noisy.samples.begin() + static_cast<std::ptrdiff_t>(offset), take, noisy.samples.begin());
    std::copy_n(m.clean.samples.begin() + static_cast<std::ptrdiff_t>(offset), take, clean.samples.begin());
    out.noisy.push_back(std::move(noisy));
    out.clean.push_back(std::move(clean));
    out.snr_db.push_back(manifest.items[idx].snr_db);
  }
  return out;
}

Mixture synth_toy_pair(ToyKind kind, ToyNoise noise_kind, double snr, std::uint64_t seed,
                       std::size_t length) {
  constexpr int fs = 16000;
  constexpr double two_pi = 2.0 * std::numbers::pi;
  if (length < 64) throw ContractError("synth_toy_pair: length must be at least 64 samples");
  Rng rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double dur = static_cast<double>(length) / fs;

  // Envelope: equal slots, each on for 40-70% of its span with 5 ms raised-cosine
  // ramps and exactly zero for the rest.
  const std::size_t slots = 3 + uniform_index(rng, 4);
  const std::size_t slot_len = length / slots;
  const std::size_t ramp = std::max<std::size_t>(1, std::min<std::size_t>(fs / 200, slot_len / 8));
  std::vector<double> env(length, 0.0);
  for (std::size_t s = 0; s < slots; ++s) {
    const auto on = static_cast<std::size_t>(slot_len * (0.4 + 0.3 * unit(rng)));
    for (std::size_t i = 0; i < on; ++i) {
      double g = 1.0;
      if (i < ramp) g = 0.5 - 0.5 * std::cos(std::numbers::pi * (i + 1) / (ramp + 1));
      if (on - i <= ramp) g = std::min(g, 0.5 - 0.5 * std::cos(std::numbers::pi * (on - i) / (ramp + 1)));
      env[s * slot_len + i] = g;
    }
  }

  std::vector<double> clean(length, 0.0);
  const std::size_t components = 2 + uniform_index(rng, 3);
  for (std::size_t c = 0; c < components; ++c) {
    const double amp = 0.3 + 0.7 * unit(rng);
    const double phase = two_pi * unit(rng);
    const double f0 = 150.0 + 2850.0 * unit(rng);
    const double f1 = kind == ToyKind::kChirp ? f0 * std::pow(2.0, 2.0 * unit(rng) - 1.0) : f0;
    for (std::size_t i = 0; i < length; ++i) {
      const double t = static_cast<double>(i) / fs;
      clean[i] += amp * std::sin(two_pi * (f0 * t + 0.5 * (f1 - f0) * t * t / dur) + phase);
    }
  }
  const double level = 0.1 / rms(clean);
  for (std::size_t i = 0; i < length; ++i) clean[i] *= level * env[i];

  std::vector<double> noise(length);
  if (noise_kind == ToyNoise::kWhite) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (double& v : noise) v = gauss(rng);
  } else {
    const double mains = unit(rng) < 0.5 ? 50.0 : 60.0;
    std::vector<double> phases(5);
    for (double& p : phases) p = two_pi * unit(rng);
    for (std::size_t i = 0; i < length; ++i) {
      const double t = static_cast<double>(i) / fs;
      double v = 0.0;
      for (std::size_t k = 1; k <= phases.size(); ++k) {
        v += std::sin(two_pi * mains * static_cast<double>(k) * t + phases[k - 1]) / static_cast<double>(k);
      }
      noise[i] = v;
    }
  }
  return mix_at_snr(Waveform{std::move(clean), fs}, Waveform{std::move(noise), fs}, snr, seed);
}

ToyKind parse_toy_kind(const std::string& name) {
  if (name == "tones") return ToyKind::kTones;
  if (name == "chirp") return ToyKind::kChirp;
  throw ConfigError("toy signal kind must be tones or chirp, got '" + name + "'");
}

ToyNoise parse_toy_noise(const std::string& name) {
  if (name == "white") return ToyNoise::kWhite;
  if (name == "hum") return ToyNoise::kHum;
  throw ConfigError("toy noise kind must be white or hum, got '" + name + "'");
}

}  // namespace gldnet

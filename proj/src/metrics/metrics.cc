// Copyright 2026 The GLD-Net Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "gldnet/metrics.h"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <numeric>

#include "gldnet/error.h"
#include "gldnet/signal.h"

namespace gldnet {

namespace {

double energy(std::span<const double> x) {
  double acc = 0.0;
  for (double v : x) acc += v * v;
  return acc;
}

void require_equal_lengths(std::span<const double> a, std::span<const double> b, const char* what) {
  if (a.size() != b.size()) {
    throw ContractError(std::string(what) + ": reference has " + std::to_string(a.size()) +
                        " samples, estimate " + std::to_string(b.size()));
  }
}

// ---- STOI internals ----------------------------------------------------------

constexpr int kStoiRate = 10000;
constexpr std::size_t kStoiFrame = 256;
constexpr std::size_t kStoiFft = 512;
constexpr std::size_t kStoiBands = 15;
constexpr double kStoiMinFreq = 150.0;
constexpr std::size_t kStoiSegment = 30;
constexpr double kStoiBeta = -15.0;
constexpr double kStoiDynRange = 40.0;
constexpr double kEps = std::numeric_limits<double>::epsilon();

// Symmetric Hann of n + 2 points with both zero endpoints dropped.
std::vector<double> stoi_window(std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i + 1) /
                                static_cast<double>(n + 1));
  }
  return w;
}

// Frame starts 0, hop, ... strictly before len - frame.
std::size_t stoi_frames(std::size_t len, std::size_t frame, std::size_t hop) {
  return len > frame ? (len - frame - 1) / hop + 1 : 0;
}

// Drops frames more than 40 dB below the loudest reference frame and
// overlap-adds the windowed survivors.
void remove_silent_frames(std::vector<double>& x, std::vector<double>& y) {
  const std::size_t hop = kStoiFrame / 2;
  const auto w = stoi_window(kStoiFrame);
  const std::size_t n = stoi_frames(x.size(), kStoiFrame, hop);
  std::vector<double> level(n);
  for (std::size_t f = 0; f < n; ++f) {
    double acc = 0.0;
    for (std::size_t i = 0; i < kStoiFrame; ++i) {
      const double v = w[i] * x[f * hop + i];
      acc += v * v;
    }
    level[f] = 20.0 * std::log10(std::sqrt(acc) + kEps);
  }
  const double peak = n ? *std::max_element(level.begin(), level.end()) : 0.0;
  std::vector<std::size_t> keep;
  for (std::size_t f = 0; f < n; ++f) {
    if (peak - kStoiDynRange - level[f] < 0) keep.push_back(f);
  }
  const std::size_t out_len = keep.empty() ? 0 : (keep.size() - 1) * hop + kStoiFrame;
  std::vector<double> xs(out_len, 0.0), ys(out_len, 0.0);
  for (std::size_t k = 0; k < keep.size(); ++k) {
    for (std::size_t i = 0; i < kStoiFrame; ++i) {
      xs[k * hop + i] += w[i] * x[keep[k] * hop + i];
      ys[k * hop + i] += w[i] * y[keep[k] * hop + i];
    }
  }
  x = std::move(xs);
  y = std::move(ys);
}

// Rows: bands, columns: frames. Band energies from the one-third-octave matrix.
std::vector<std::vector<double>> third_octave_envelopes(const std::vector<double>& x) {
  const std::size_t hop = kStoiFrame / 2;
  const auto w = stoi_window(kStoiFrame);
  const std::size_t n = stoi_frames(x.size(), kStoiFrame, hop);
  const std::size_t bins = kStoiFft / 2 + 1;

  // Band edges snap to the nearest FFT bin; the upper edge is exclusive.
  std::vector<std::pair<std::size_t, std::size_t>> bands(kStoiBands);
  auto nearest = [&](double hz) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t b = 0; b < bins; ++b) {
      const double f = static_cast<double>(b) * kStoiRate / static_cast<double>(kStoiFft);
      const double d = (f - hz) * (f - hz);
      if (d < best_d) {
        best_d = d;
        best = b;
      }
    }
    return best;
  };
  for (std::size_t k = 0; k < kStoiBands; ++k) {
    const double kk = static_cast<double>(k);
    bands[k] = {nearest(kStoiMinFreq * std::pow(2.0, (2 * kk - 1) / 6)),
                nearest(kStoiMinFreq * std::pow(2.0, (2 * kk + 1) / 6))};
  }

  RealFft fft(kStoiFft);
  std::vector<double> buf(kStoiFft);
  std::vector<std::complex<double>> spec(bins);
  std::vector<std::vector<double>> env(kStoiBands, std::vector<double>(n));
  for (std::size_t f = 0; f < n; ++f) {
    std::fill(buf.begin(), buf.end(), 0.0);
    for (std::size_t i = 0; i < kStoiFrame; ++i) buf[i] = w[i] * x[f * hop + i];
    fft.forward(buf.data(), spec.data());
    for (std::size_t k = 0; k < kStoiBands; ++k) {
      double acc = 0.0;
      for (std::size_t b = bands[k].first; b < bands[k].second; ++b) acc += std::norm(spec[b]);
      env[k][f] = std::sqrt(acc);
    }
  }
  return env;
}

double norm2(const double* v, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += v[i] * v[i];
  return std::sqrt(acc);
}

}  // namespace

double si_sdr(std::span<const double> reference, std::span<const double> estimate) {
  require_equal_lengths(reference, estimate, "si_sdr");
  const double ref_energy = energy(reference);
  if (ref_energy == 0.0) throw ContractError("si_sdr: reference is silent");
  double cross = 0.0;
  for (std::size_t i = 0; i < reference.size(); ++i) cross += reference[i] * estimate[i];
  const double scale = cross / ref_energy;
  double target = 0.0, residual = 0.0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    const double t = scale * reference[i];
    target += t * t;
    residual += (estimate[i] - t) * (estimate[i] - t);
  }
  if (residual == 0.0) return kSiSdrCeiling;
  if (target == 0.0) return -kSiSdrCeiling;
  return std::clamp(10.0 * std::log10(target / residual), -kSiSdrCeiling, kSiSdrCeiling);
}

double seg_snr(std::span<const double> reference, std::span<const double> estimate,
               std::size_t frame, std::size_t hop) {
  require_equal_lengths(reference, estimate, "seg_snr");
  if (frame == 0 || hop == 0) throw ContractError("seg_snr: frame and hop must be positive");
  const std::size_t len = reference.size();
  const std::size_t frames = len >= frame ? (len - frame) / hop + 1 : (len ? 1 : 0);
  const std::size_t span = std::min(frame, len);
  double total = 0.0;
  std::size_t voiced = 0;
  for (std::size_t f = 0; f < frames; ++f) {
    const auto ref = reference.subspan(f * hop, span);
    const double e = energy(ref);
    if (10.0 * std::log10(e / static_cast<double>(span) + 1e-300) <= -40.0) continue;
    double err = 0.0;
    for (std::size_t i = 0; i < span; ++i) {
      const double d = ref[i] - estimate[f * hop + i];
      err += d * d;
    }
    const double snr = err == 0.0 ? 35.0 : 10.0 * std::log10(e / err);
    total += std::clamp(snr, -10.0, 35.0);
    ++voiced;
  }
  if (voiced == 0) throw ContractError("seg_snr: reference has no frame above -40 dBFS");
  return total / static_cast<double>(voiced);
}

std::vector<double> resample_rational(std::span<const double> x, int up, int down) {
  if (up <= 0 || down <= 0) throw ContractError("resample: factors must be positive");
  const int g = std::gcd(up, down);
  up /= g;
  down /= g;
  if (up == 1 && down == 1) return {x.begin(), x.end()};
  // Octave's resample design: 60 dB stopband rejection with a roll-off of a
  // tenth of the cutoff.
  const int m = std::max(up, down);
  const double fc = 0.5 / m;  // cycles per upsampled sample
  const double rejection_db = 60.0;
  const double beta = 0.1102 * (rejection_db - 8.7);
  const auto half = static_cast<std::size_t>(std::ceil((rejection_db - 8.0) / (28.714 * fc / 10.0)));
  const std::size_t taps = 2 * half + 1;
  std::vector<double> h(taps);
  double sum = 0.0;
  for (std::size_t k = 0; k < taps; ++k) {
    const double t = static_cast<double>(k) - static_cast<double>(half);
    const double sinc = t == 0.0 ? 2 * fc : std::sin(2 * std::numbers::pi * fc * t) / (std::numbers::pi * t);
    const double r = t / static_cast<double>(half);
    const double kaiser = std::cyl_bessel_i(0.0, beta * std::sqrt(std::max(0.0, 1 - r * r))) /
                          std::cyl_bessel_i(0.0, beta);
    h[k] = sinc * kaiser;
    sum += h[k];
  }
  for (double& v : h) v *= up / sum;

  const std::size_t out_len = (x.size() * up + down - 1) / down;
  std::vector<double> y(out_len, 0.0);
  const auto p = static_cast<std::ptrdiff_t>(up);
  for (std::size_t mo = 0; mo < out_len; ++mo) {
    // Upsampled position of this output, shifted by the filter delay.
    const std::ptrdiff_t pos = static_cast<std::ptrdiff_t>(mo * down + half);
    std::ptrdiff_t i_hi = pos / p;
    std::ptrdiff_t i_lo = (pos - static_cast<std::ptrdiff_t>(taps) + p) / p;
    i_lo = std::max<std::ptrdiff_t>(i_lo, 0);
    i_hi = std::min<std::ptrdiff_t>(i_hi, static_cast<std::ptrdiff_t>(x.size()) - 1);
    double acc = 0.0;
    for (std::ptrdiff_t i = i_lo; i <= i_hi; ++i) {
      const std::ptrdiff_t k = pos - i * p;
      if (k >= 0 && k < static_cast<std::ptrdiff_t>(taps)) acc += h[static_cast<std::size_t>(k)] * x[i];
    }
    y[mo] = acc;
  }
  return y;
}

double stoi(std::span<const double> reference, std::span<const double> estimate, int fs) {
  require_equal_lengths(reference, estimate, "stoi");
  if (fs <= 0 || reference.size() < static_cast<std::size_t>(fs)) {
    throw ContractError("stoi: needs at least one second of audio, got " +
                        std::to_string(reference.size()) + " samples at " + std::to_string(fs) + " Hz");
  }
  if (energy(reference) == 0.0) throw ContractError("stoi: reference is silent");
  auto x = resample_rational(reference, kStoiRate, fs);
  auto y = resample_rational(estimate, kStoiRate, fs);
  remove_silent_frames(x, y);
  const auto xe = third_octave_envelopes(x);
  const auto ye = third_octave_envelopes(y);
  const std::size_t frames = xe[0].size();
  if (frames < kStoiSegment) {
    throw ContractError("stoi: only " + std::to_string(frames) + " active frames, need " +
                        std::to_string(kStoiSegment));
  }
  const double clip = std::pow(10.0, -kStoiBeta / 20.0);
  const std::size_t segments = frames - kStoiSegment + 1;
  double total = 0.0;
  std::vector<double> xs(kStoiSegment), ys(kStoiSegment);
  for (std::size_t m = 0; m < segments; ++m) {
    for (std::size_t k = 0; k < kStoiBands; ++k) {
      std::copy_n(xe[k].begin() + static_cast<std::ptrdiff_t>(m), kStoiSegment, xs.begin());
      std::copy_n(ye[k].begin() + static_cast<std::ptrdiff_t>(m), kStoiSegment, ys.begin());
      const double alpha = norm2(xs.data(), kStoiSegment) / (norm2(ys.data(), kStoiSegment) + kEps);
      for (std::size_t j = 0; j < kStoiSegment; ++j) ys[j] = std::min(ys[j] * alpha, xs[j] * (1 + clip));
      const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / kStoiSegment;
      const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / kStoiSegment;
      for (std::size_t j = 0; j < kStoiSegment; ++j) {
        xs[j] -= mx;
        ys[j] -= my;
      }
      const double nx = norm2(xs.data(), kStoiSegment) + kEps;
      const double ny = norm2(ys.data(), kStoiSegment) + kEps;
      double corr = 0.0;
      for (std::size_t j = 0; j < kStoiSegment; ++j) corr += (xs[j] / nx) * (ys[j] / ny);
      total += corr;
    }
  }
  return total / static_cast<double>(kStoiBands * segments);
}

std::string metric_name(Metric m) {
  switch (m) {
    case Metric::kSiSdr:
      return "si_sdr";
    case Metric::kSegSnr:
      return "seg_snr";
    case Metric::kStoi:
      return "stoi";
  }
  return "?";
}

MetricReport::MetricReport(std::vector<double> conditions) : conditions_(std::move(conditions)) {}

void MetricReport::add(MetricRecord r) { records_.push_back(std::move(r)); }

std::vector<std::string> MetricReport::systems() const {
  std::vector<std::string> out;
  for (const auto& r : records_) {
    if (std::find(out.begin(), out.end(), r.system) == out.end()) out.push_back(r.system);
  }
  return out;
}

std::optional<double> MetricReport::mean(const std::string& system, Metric m, double condition_db) const {
  double acc = 0.0;
  std::size_t n = 0;
  for (const auto& r : records_) {
    if (r.system == system && r.metric == m && r.condition_db == condition_db) {
      acc += r.value;
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return acc / static_cast<double>(n);
}

std::optional<double> MetricReport::average(const std::string& system, Metric m) const {
  double acc = 0.0;
  std::size_t n = 0;
  for (double c : conditions_) {
    if (auto v = mean(system, m, c)) {
      acc += *v;
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return acc / static_cast<double>(n);
}

std::string MetricReport::records_text() const {
  std::string out;
  for (const auto& r : records_) {
    out += fmt::format("{}\t{}\t{:g}\t{}\t{:.6f}\n", r.utterance, r.system, r.condition_db,
                       metric_name(r.metric), r.value);
  }
  return out;
}

std::string MetricReport::table() const {
  const auto names = systems();
  std::size_t label = std::string("Test SNR").size();
  for (const auto& s : names) label = std::max(label, s.size());
  constexpr int cell = 8;
  const std::size_t block = (conditions_.size() + 1) * (cell + 1);

  std::string out = fmt::format("{:<{}}", "Metric", label);
  for (Metric m : kAllMetrics) {
    const char* title = m == Metric::kSiSdr ? "SI-SDR (dB)" : m == Metric::kSegSnr ? "segSNR (dB)" : "STOI (%)";
    out += fmt::format(" |{:^{}}", title, block);
  }
  out += "\n" + fmt::format("{:<{}}", "Test SNR", label);
  for (std::size_t b = 0; b < std::size(kAllMetrics); ++b) {
    out += " |";
    for (double c : conditions_) out += fmt::format(" {:>{}g}", c, cell);
    out += fmt::format(" {:>{}}", "Avg.", cell);
  }
  out += "\n";
  for (const auto& s : names) {
    out += fmt::format("{:<{}}", s, label);
    for (Metric m : kAllMetrics) {
      const double unit = m == Metric::kStoi ? 100.0 : 1.0;
      auto cell_text = [&](std::optional<double> v) {
        return v ? fmt::format(" {:>{}.2f}", *v * unit, cell) : fmt::format(" {:>{}}", "-", cell);
      };
      out += " |";
      for (double c : conditions_) out += cell_text(mean(s, m, c));
      out += cell_text(average(s, m));
    }
    out += "\n";
  }
  return out;
}

}  // namespace gldnet

// Copyright 2026 The GLD-Net Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace gldnet {

inline constexpr double kSiSdrCeiling = 100.0;

// Scale-invariant SDR in dB, capped at kSiSdrCeiling. No mean removal, so a
// DC offset in the estimate counts as distortion. Throws ContractError on
// unequal lengths or a silent reference.
double si_sdr(std::span<const double> reference, std::span<const double> estimate);

// Mean per-frame SNR over frames whose reference energy is above -40 dBFS,
// each clamped to [-10, 35] dB. Throws ContractError when no frame qualifies.
double seg_snr(std::span<const double> reference, std::span<const double> estimate,
               std::size_t frame = 512, std::size_t hop = 256);

// Short-time objective intelligibility: 10 kHz, 40 dB frame VAD, 15
// one-third-octave bands from 150 Hz, 30-frame (384 ms) segments, clipping at
// -15 dB SDR. Returns the raw mean correlation. Throws ContractError for
// inputs under one second or with fewer than 30 active frames.
double stoi(std::span<const double> reference, std::span<const double> estimate, int fs = 16000);

// Polyphase Kaiser-windowed sinc resampler by the rational factor up/down,
// with the filter design of Octave's resample.
std::vector<double> resample_rational(std::span<const double> x, int up, int down);

enum class Metric { kSiSdr, kSegSnr, kStoi };
inline constexpr Metric kAllMetrics[] = {Metric::kSiSdr, Metric::kSegSnr, Metric::kStoi};
std::string metric_name(Metric m);

struct MetricRecord {
  std::string utterance;
  std::string system;  // e.g. "Unprocessed" or "GLD-Net"
  double condition_db = 0.0;
  Metric metric = Metric::kSiSdr;
  double value = 0.0;
};

class MetricReport {
 public:
  explicit MetricReport(std::vector<double> conditions = {-5, 0, 5, 10});

  void add(MetricRecord r);
  const std::vector<MetricRecord>& records() const { return records_; }
  const std::vector<double>& conditions() const { return conditions_; }
  // Systems in first-seen order.
  std::vector<std::string> systems() const;

  // Absent when no utterance falls in the condition.
  std::optional<double> mean(const std::string& system, Metric m, double condition_db) const;
  // Mean of the per-condition means that exist.
  std::optional<double> average(const std::string& system, Metric m) const;

  // One "utterance<TAB>system<TAB>condition<TAB>metric<TAB>value" line per record.
  std::string records_text() const;
  // Rows per system, one block of condition columns plus "Avg." per metric.
  // STOI is shown in percent.
  std::string table() const;

 private:
  std::vector<double> conditions_;
  std::vector<MetricRecord> records_;
};

}  // namespace gldnet

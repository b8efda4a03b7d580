// Copyright 2026 The GLD-Net Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "gldnet/tensor.h"

namespace gldnet {

inline constexpr int kSampleRate = 16000;

struct Waveform {
  std::vector<double> samples;
  int sample_rate = kSampleRate;
};

struct StftConfig {
  std::size_t win_len = 512;
  std::size_t hop = 256;
  std::size_t fft_size = 512;

  std::size_t bins() const { return fft_size / 2 + 1; }
  void validate() const;  // throws ContractError
};

// Real-input FFT of fixed length backed by FFTW. Instances are not shared
// between threads; construction and destruction are serialized internally.
class RealFft {
 public:
  explicit RealFft(std::size_t n);
  ~RealFft();
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  std::size_t size() const { return n_; }
  // in: n samples; out: n/2 + 1 bins.
  void forward(const double* in, std::complex<double>* out);
  // in: n/2 + 1 bins; out: n samples, scaled by 1/n so inverse(forward(x)) == x.
  void inverse(const std::complex<double>* in, double* out);

 private:
  struct Plans;
  std::size_t n_;
  std::unique_ptr<Plans> plans_;
};

std::vector<double> hann(std::size_t n, bool periodic = true);

// 1 + ceil((n - win_len) / hop).
std::size_t frame_count(std::size_t samples, const StftConfig& cfg);

// Returns T x F_full x 2 with plane 0 real and plane 1 imaginary.
Tensor<double> stft(std::span<const double> x, const StftConfig& cfg);

// Weighted overlap-add inverse. Output has (T - 1) * hop + win_len samples,
// or `length` samples when nonzero (truncated or zero-extended).
std::vector<double> istft(const Tensor<double>& spec, const StftConfig& cfg, std::size_t length = 0);

// Transposed 1-D convolution from D-dimensional frame features to samples.
// Feature d < D/2 is the real part of bin d, feature D/2 + d the imaginary part.
template <typename T>
struct LearnableDecoder {
  Tensor<T> kernel;  // D x win_len
  std::size_t hop = 256;

  std::size_t feature_dim() const { return kernel.dim(0); }
  std::size_t kernel_len() const { return kernel.dim(1); }
};

// Kernel reproducing istft for interior samples. `bins` may be smaller than
// F_full to drop the highest bins; default uses every onesided bin.
LearnableDecoder<double> init_decoder_as_istft(const StftConfig& cfg, std::size_t bins = 0);

// frames: [N x] T x D. Returns [N x] ((T - 1) * hop + win_len) samples.
template <typename T>
Tensor<T> apply_learnable_decoder(const Tensor<T>& frames, const LearnableDecoder<T>& decoder);

// Flattens a T x F x 2 spectrogram into T x 2F decoder frames (real block, imaginary block).
Tensor<double> spectrogram_to_frames(const Tensor<double>& spec);

Waveform read_wav(const std::string& path);
// 16-bit PCM, mono. Samples are clipped to [-1, 1].
void write_wav(const std::string& path, const Waveform& w);

// Linear interpolation onto a new rate.
std::vector<double> resample_linear(std::span<const double> x, int from_rate, int to_rate);

}  // namespace gldnet

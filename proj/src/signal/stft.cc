// Copyright 2026 The GLD-Net Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <fftw3.h>

#include <cmath>
#include <mutex>
#include <numbers>

#include "gldnet/error.h"
#include "gldnet/ops.h"
#include "gldnet/signal.h"

namespace gldnet {

namespace {

// The FFTW planner is not reentrant.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

struct RealFft::Plans {
  double* real = nullptr;
  fftw_complex* spec = nullptr;
  fftw_plan forward = nullptr;
  fftw_plan inverse = nullptr;
};

RealFft::RealFft(std::size_t n) : n_(n), plans_(std::make_unique<Plans>()) {
  if (n < 2) throw ContractError("RealFft: size must be at least 2");
  std::lock_guard lock(planner_mutex());
  plans_->real = fftw_alloc_real(n);
  plans_->spec = fftw_alloc_complex(n / 2 + 1);
  const int len = static_cast<int>(n);
  plans_->forward = fftw_plan_dft_r2c_1d(len, plans_->real, plans_->spec, FFTW_ESTIMATE);
  plans_->inverse = fftw_plan_dft_c2r_1d(len, plans_->spec, plans_->real, FFTW_ESTIMATE);
}

RealFft::~RealFft() {
  std::lock_guard lock(planner_mutex());
  fftw_destroy_plan(plans_->forward);
  fftw_destroy_plan(plans_->inverse);
  fftw_free(plans_->real);
  fftw_free(plans_->spec);
}

void RealFft::forward(const double* in, std::complex<double>* out) {
  std::copy(in, in + n_, plans_->real);
  fftw_execute(plans_->forward);
  for (std::size_t k = 0; k <= n_ / 2; ++k) out[k] = {plans_->spec[k][0], plans_->spec[k][1]};
}

void RealFft::inverse(const std::complex<double>* in, double* out) {
  for (std::size_t k = 0; k <= n_ / 2; ++k) {
    plans_->spec[k][0] = in[k].real();
    plans_->spec[k][1] = in[k].imag();
  }
  fftw_execute(plans_->inverse);  // c2r destroys its input; spec is scratch
  const double scale = 1.0 / static_cast<double>(n_);
  for (std::size_t i = 0; i < n_; ++i) out[i] = plans_->real[i] * scale;
}

void StftConfig::validate() const {
  if (win_len < 2 || hop == 0 || hop > win_len || fft_size < win_len) {
    throw ContractError("stft config: need 0 < hop <= win_len <= fft_size, got win " +
                        std::to_string(win_len) + " hop " + std::to_string(hop) + " fft " +
                        std::to_string(fft_size));
  }
}

std::vector<double> hann(std::size_t n, bool periodic) {
  if (n < 2) throw ContractError("hann: length must be at least 2, got " + std::to_string(n));
  const double denom = static_cast<double>(periodic ? n : n - 1);
  std::vector<double> w(n);
  for (std::size_t k = 0; k < n; ++k) {
    w[k] = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * static_cast<double>(k) / denom));
  }
  return w;
}

std::size_t frame_count(std::size_t samples, const StftConfig& cfg) {
  if (samples < cfg.win_len) {
    throw ContractError("stft: input of " + std::to_string(samples) +
                        " samples is shorter than one window of " + std::to_string(cfg.win_len));
  }
  return 1 + (samples - cfg.win_len + cfg.hop - 1) / cfg.hop;
}

Tensor<double> stft(std::span<const double> x, const StftConfig& cfg) {
  cfg.validate();
  const std::size_t frames = frame_count(x.size(), cfg);
  const std::size_t bins = cfg.bins();
  const auto window = hann(cfg.win_len);
  RealFft fft(cfg.fft_size);
  std::vector<double> buf(cfg.fft_size);
  std::vector<std::complex<double>> spec(bins);
  Tensor<double> out(Shape{frames, bins, 2});
  for (std::size_t t = 0; t < frames; ++t) {
    std::fill(buf.begin(), buf.end(), 0.0);
    const std::size_t start = t * cfg.hop;
    for (std::size_t k = 0; k < cfg.win_len && start + k < x.size(); ++k) {
      buf[k] = x[start + k] * window[k];
    }
    fft.forward(buf.data(), spec.data());
    for (std::size_t f = 0; f < bins; ++f) {
      out[(t * bins + f) * 2] = spec[f].real();
      out[(t * bins + f) * 2 + 1] = spec[f].imag();
    }
  }
  return out;
}

std::vector<double> istft(const Tensor<double>& spec, const StftConfig& cfg, std::size_t length) {
  cfg.validate();
  const std::size_t bins = cfg.bins();
  if (spec.rank() != 3 || spec.dim(1) != bins || spec.dim(2) != 2 || spec.dim(0) == 0) {
    throw DimensionError("istft: expected T x " + std::to_string(bins) + " x 2 spectrogram, got " +
                         to_string(spec.shape()));
  }
  const std::size_t frames = spec.dim(0);
  const std::size_t total = (frames - 1) * cfg.hop + cfg.win_len;
  const auto window = hann(cfg.win_len);
  RealFft fft(cfg.fft_size);
  std::vector<std::complex<double>> bins_buf(bins);
  std::vector<double> frame(cfg.fft_size);
  std::vector<double> out(total, 0.0), norm(total, 0.0);
  for (std::size_t t = 0; t < frames; ++t) {
    for (std::size_t f = 0; f < bins; ++f) {
      bins_buf[f] = {spec[(t * bins + f) * 2], spec[(t * bins + f) * 2 + 1]};
    }
    fft.inverse(bins_buf.data(), frame.data());
    for (std::size_t k = 0; k < cfg.win_len; ++k) {
      out[t * cfg.hop + k] += frame[k] * window[k];
      norm[t * cfg.hop + k] += window[k] * window[k];
    }
  }
  for (std::size_t i = 0; i < total; ++i) {
    out[i] = norm[i] > 1e-10 ? out[i] / norm[i] : 0.0;
  }
  if (length != 0) out.resize(length, 0.0);
  return out;
}

LearnableDecoder<double> init_decoder_as_istft(const StftConfig& cfg, std::size_t bins) {
  cfg.validate();
  const std::size_t full = cfg.bins();
  if (bins == 0) bins = full;
  if (bins > full) {
    throw DimensionError("init_decoder_as_istft: " + std::to_string(bins) + " bins exceeds " +
                         std::to_string(full));
  }
  const std::size_t n = cfg.fft_size, win = cfg.win_len, hop = cfg.hop;
  const auto window = hann(win);
  // Interior WOLA normalization is periodic in the hop.
  std::vector<double> wsum2(hop, 0.0);
  for (std::size_t m = 0; m < win; ++m) wsum2[m % hop] += window[m] * window[m];

  LearnableDecoder<double> dec;
  dec.hop = hop;
  dec.kernel = Tensor<double>(Shape{2 * bins, win});
  for (std::size_t k = 0; k < bins; ++k) {
    const bool edge = k == 0 || 2 * k == n;
    const double c = edge ? 1.0 : 2.0;
    for (std::size_t m = 0; m < win; ++m) {
      const double phase = 2.0 * std::numbers::pi * static_cast<double>(k * m % n) / static_cast<double>(n);
      const double g = window[m] / (wsum2[m % hop] * static_cast<double>(n));
      dec.kernel[k * win + m] = c * std::cos(phase) * g;
      // Imaginary parts of DC and Nyquist are discarded by a real inverse.
      dec.kernel[(bins + k) * win + m] = edge ? 0.0 : -c * std::sin(phase) * g;
    }
  }
  return dec;
}

template <typename T>
Tensor<T> apply_learnable_decoder(const Tensor<T>& frames, const LearnableDecoder<T>& decoder) {
  const std::size_t d = decoder.feature_dim();
  if ((frames.rank() != 2 && frames.rank() != 3) || frames.dim(frames.rank() - 1) != d) {
    throw DimensionError("learnable decoder: frames " + to_string(frames.shape()) +
                         " do not match feature dim " + std::to_string(d));
  }
  const bool batched = frames.rank() == 3;
  const std::size_t n = batched ? frames.dim(0) : 1;
  const std::size_t t = frames.dim(batched ? 1 : 0);
  auto flat = reshape(frames, Shape{n * t, d});
  auto segments = matmul(flat, decoder.kernel);
  auto shaped = batched ? reshape(segments, Shape{n, t, decoder.kernel_len()})
                        : reshape(segments, Shape{t, decoder.kernel_len()});
  return overlap_add(shaped, decoder.hop);
}

template Tensor<float> apply_learnable_decoder(const Tensor<float>&, const LearnableDecoder<float>&);
template Tensor<double> apply_learnable_decoder(const Tensor<double>&,
                                                const LearnableDecoder<double>&);

Tensor<double> spectrogram_to_frames(const Tensor<double>& spec) {
  if (spec.rank() != 3 || spec.dim(2) != 2) {
    throw DimensionError("spectrogram_to_frames: expected T x F x 2, got " + to_string(spec.shape()));
  }
  return reshape(permute(spec, {0, 2, 1}), Shape{spec.dim(0), 2 * spec.dim(1)});
}

}  // namespace gldnet

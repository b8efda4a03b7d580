// Copyright 2026 The GLD-Net Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gldnet/config.h"
#include "gldnet/gld.h"
#include "gldnet/signal.h"

namespace gldnet {

enum class OutputHead { kMono, kRealImag };
enum class DecoderInit { kRandom, kIstft };

struct ModelConfig {
  std::vector<std::size_t> encoder_channels{16, 32, 64, 128, 256};
  std::vector<std::size_t> decoder_channels{128, 64, 32, 16, 1};
  std::size_t lstm_layers = 2;
  std::size_t lstm_hidden = 512;
  std::size_t intermediate_blocks = 2;
  bool enable_sb = true;
  bool enable_ib = true;
  GldOptions gld;
  OutputHead head = OutputHead::kMono;
  DecoderInit decoder_init = DecoderInit::kRandom;
  StftConfig stft;

  static ModelConfig full();
  static ModelConfig tiny();
  static ModelConfig preset(const std::string& name);  // "full" or "tiny"

  // Bins the network sees: the onesided spectrum without its Nyquist bin.
  std::size_t freq_bins() const { return stft.fft_size / 2; }
  void validate() const;  // throws ConfigError

  // model.* and stft.* keys.
  void read(ConfigReader& reader);
  void write(KeyValues& kv) const;
};

template <typename T>
struct GldLayer {
  bool enable_sb = true;
  bool enable_ib = true;
  ConvBlock<T> sb, nb, ib;
  GldBlock<T> speech, interference;
  ConvBlock<T> fuse_sb, fuse_ib;
  std::vector<ConvBlock<T>> intermediate;
  ConvBlock<T> confidence;
  ConvBlock<T> down;

  static GldLayer make(std::size_t in_ch, std::size_t out_ch, const ModelConfig& cfg, Rng& rng);

  // Output of the closing downsampling conv. *gate receives the local-global
  // dependency gate, left undefined when both branches are off.
  Tensor<T> forward(const Tensor<T>& x, Mode mode, Tensor<T>* gate = nullptr);

  void collect(const std::string& prefix, ParameterList<T>& params) const;
  void collect_buffers(const std::string& prefix, ParameterList<T>& buffers) const;
};

template <typename T>
struct LstmLayer {
  Tensor<T> w_ih, w_hh, bias;
};

template <typename T>
struct Bottleneck {
  std::vector<LstmLayer<T>> layers;
  Tensor<T> proj_w, proj_b;  // (C * F) x H, C * F

  static Bottleneck make(std::size_t features, const ModelConfig& cfg, Rng& rng);
  // N x C x T x F -> same shape.
  Tensor<T> forward(const Tensor<T>& x) const;
  void collect(const std::string& prefix, ParameterList<T>& params) const;
};

template <typename T>
struct EncoderOutput {
  Tensor<T> features;
  std::vector<Tensor<T>> skips;
};

template <typename T>
class GldNet {
 public:
  GldNet(const ModelConfig& cfg, std::uint64_t seed);

  const ModelConfig& config() const { return cfg_; }

  // N x S waveforms -> N x 2 x T x F spectrogram input (not differentiable).
  Tensor<T> analyze(const Tensor<T>& waveforms) const;

  EncoderOutput<T> encoder_forward(const Tensor<T>& spec, Mode mode);
  Tensor<T> bottleneck_forward(const Tensor<T>& x);
  // Returns N x C_out x T x F; throws DimensionError naming the layer on skip mismatch.
  Tensor<T> decoder_forward(const Tensor<T>& x, const std::vector<Tensor<T>>& skips, Mode mode);
  // N x C_out x T x F -> N x T x D frame features.
  Tensor<T> frames(const Tensor<T>& decoded) const;

  // N x S noisy waveforms -> N x S enhanced waveforms.
  Tensor<T> forward(const Tensor<T>& noisy, Mode mode);

  ParameterList<T> parameters() const;
  ParameterList<T> buffers() const;

  std::vector<GldLayer<T>> encoder;
  Bottleneck<T> bottleneck;
  std::vector<ConvBlock<T>> decoder;
  LearnableDecoder<T> synthesis;

 private:
  ModelConfig cfg_;
};

}  // namespace gldnet

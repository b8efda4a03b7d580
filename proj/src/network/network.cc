// Copyright 2026 The GLD-Net Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "gldnet/network.h"

#include <cmath>

#include "gldnet/error.h"

namespace gldnet {

namespace {

// Independent stream per component so enabling or disabling one part of the
// model leaves the initialization of every other part untouched.
Rng component_rng(std::uint64_t seed, std::uint64_t component) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(component)};
  return Rng(seq);
}

constexpr std::uint64_t kBottleneckStream = 100;
constexpr std::uint64_t kDecoderStream = 200;
constexpr std::uint64_t kSynthesisStream = 300;

template <typename T>
void require_same_plane(const Tensor<T>& ref, const Tensor<T>& other, const std::string& what) {
  if (ref.dim(0) != other.dim(0) || ref.dim(2) != other.dim(2) || ref.dim(3) != other.dim(3)) {
    throw DimensionError(what + " feature " + to_string(other.shape()) +
                         " does not match intermediate feature " + to_string(ref.shape()));
  }
}

}  // namespace

ModelConfig ModelConfig::full() { return ModelConfig{}; }

ModelConfig ModelConfig::tiny() {
  ModelConfig c;
  c.encoder_channels = {4, 8, 8, 16, 16};
  c.decoder_channels = {8, 8, 4, 4, 1};
  c.lstm_hidden = 32;
  c.stft = StftConfig{128, 64, 128};
  return c;
}

ModelConfig ModelConfig::preset(const std::string& name) {
  if (name == "full") return full();
  if (name == "tiny") return tiny();
  throw ConfigError("unknown preset '" + name + "' (expected tiny or full)");
}

void ModelConfig::validate() const {
  try {
    stft.validate();
  } catch (const ContractError& e) {
    throw ConfigError(e.what());
  }
  const std::size_t layers = encoder_channels.size();
  if (layers == 0 || decoder_channels.size() != layers) {
    throw ConfigError("model: encoder and decoder schedules must be non-empty and of equal length (" +
                      join_sizes(encoder_channels) + " vs " + join_sizes(decoder_channels) + ")");
  }
  for (auto c : encoder_channels) {
    if (c == 0) throw ConfigError("model: encoder channel counts must be positive");
  }
  for (auto c : decoder_channels) {
    if (c == 0) throw ConfigError("model: decoder channel counts must be positive");
  }
  if (freq_bins() % (std::size_t{1} << layers) != 0) {
    throw ConfigError("model: " + std::to_string(freq_bins()) + " frequency bins cannot be halved " +
                      std::to_string(layers) + " times");
  }
  if (lstm_layers == 0 || lstm_hidden == 0) throw ConfigError("model: LSTM needs layers and hidden units");
  if (intermediate_blocks == 0) throw ConfigError("model: intermediate_blocks must be at least 1");
  if (head == OutputHead::kMono && decoder_channels.back() != 1) {
    throw ConfigError("model: mono head requires a final decoder channel count of 1");
  }
  if (decoder_init == DecoderInit::kIstft && head != OutputHead::kRealImag) {
    throw ConfigError("model: istft decoder init requires the ri head");
  }
}

void ModelConfig::read(ConfigReader& r) {
  encoder_channels = r.get_size_list("model.encoder_channels", encoder_channels);
  decoder_channels = r.get_size_list("model.decoder_channels", decoder_channels);
  lstm_layers = r.get_size("model.lstm_layers", lstm_layers);
  lstm_hidden = r.get_size("model.lstm_hidden", lstm_hidden);
  intermediate_blocks = r.get_size("model.intermediate_blocks", intermediate_blocks);
  enable_sb = r.get_bool("model.enable_sb", enable_sb);
  enable_ib = r.get_bool("model.enable_ib", enable_ib);
  gld.literal_aggregation = r.get_bool("model.literal_aggregation", gld.literal_aggregation);
  gld.literal_speech_mask = r.get_bool("model.literal_speech_mask", gld.literal_speech_mask);
  gld.attention_scale = r.get_bool("model.attention_scale", gld.attention_scale);
  head = r.get_choice("model.head", head == OutputHead::kMono ? "mono" : "ri", {"mono", "ri"}) == "mono"
             ? OutputHead::kMono
             : OutputHead::kRealImag;
  decoder_init = r.get_choice("model.decoder_init",
                              decoder_init == DecoderInit::kRandom ? "random" : "istft",
                              {"random", "istft"}) == "random"
                     ? DecoderInit::kRandom
                     : DecoderInit::kIstft;
  stft.win_len = r.get_size("stft.win_len", stft.win_len);
  stft.hop = r.get_size("stft.hop", stft.hop);
  stft.fft_size = r.get_size("stft.fft_size", stft.fft_size);
}

void ModelConfig::write(KeyValues& kv) const {
  auto flag = [](bool b) { return std::string(b ? "true" : "false"); };
  kv["model.encoder_channels"] = join_sizes(encoder_channels);
  kv["model.decoder_channels"] = join_sizes(decoder_channels);
  kv["model.lstm_layers"] = std::to_string(lstm_layers);
  kv["model.lstm_hidden"] = std::to_string(lstm_hidden);
  kv["model.intermediate_blocks"] = std::to_string(intermediate_blocks);
  kv["model.enable_sb"] = flag(enable_sb);
  kv["model.enable_ib"] = flag(enable_ib);
  kv["model.literal_aggregation"] = flag(gld.literal_aggregation);
  kv["model.literal_speech_mask"] = flag(gld.literal_speech_mask);
  kv["model.attention_scale"] = flag(gld.attention_scale);
  kv["model.head"] = head == OutputHead::kMono ? "mono" : "ri";
  kv["model.decoder_init"] = decoder_init == DecoderInit::kRandom ? "random" : "istft";
  kv["stft.win_len"] = std::to_string(stft.win_len);
  kv["stft.hop"] = std::to_string(stft.hop);
  kv["stft.fft_size"] = std::to_string(stft.fft_size);
}

// ---- GLD layer ---------------------------------------------------------------

template <typename T>
GldLayer<T> GldLayer<T>::make(std::size_t in_ch, std::size_t out_ch, const ModelConfig& cfg,
                              Rng& rng) {
  GldLayer l;
  l.enable_sb = cfg.enable_sb;
  l.enable_ib = cfg.enable_ib;
  const auto same = same_geometry();
  // The conv-only path is drawn first so it is identical with or without branches.
  for (std::size_t i = 0; i < cfg.intermediate_blocks; ++i) {
    l.intermediate.push_back(
        ConvBlock<T>::make(BlockKind::kConv, i == 0 ? in_ch : out_ch, out_ch, same, rng));
  }
  l.down = ConvBlock<T>::make(BlockKind::kConv, out_ch, out_ch, downsample_geometry(), rng);
  if (!l.enable_sb && !l.enable_ib) return l;

  l.nb = ConvBlock<T>::make(BlockKind::kConv, in_ch, out_ch, same, rng);
  std::size_t conf_in = 2 * out_ch;
  if (l.enable_sb) {
    l.sb = ConvBlock<T>::make(BlockKind::kConv, in_ch, out_ch, same, rng);
    l.speech = GldBlock<T>::make(BlockVariant::kSpeech, out_ch, out_ch, cfg.gld, rng);
    l.fuse_sb = ConvBlock<T>::make(BlockKind::kConv, 2 * out_ch, out_ch, same, rng);
    conf_in += out_ch;
  }
  if (l.enable_ib) {
    l.ib = ConvBlock<T>::make(BlockKind::kConv, in_ch, out_ch, same, rng);
    l.interference =
        GldBlock<T>::make(BlockVariant::kInterference, out_ch, out_ch, cfg.gld, rng);
    l.fuse_ib = ConvBlock<T>::make(BlockKind::kConv, 2 * out_ch, out_ch, same, rng);
  }
  l.confidence = ConvBlock<T>::make(BlockKind::kConv, conf_in, out_ch, same, rng);
  return l;
}

template <typename T>
Tensor<T> GldLayer<T>::forward(const Tensor<T>& x, Mode mode, Tensor<T>* gate_out) {
  Tensor<T> inter = x;
  for (auto& b : intermediate) inter = b.forward(inter, mode);
  if (!enable_sb && !enable_ib) return down.forward(inter, mode);

  std::vector<Tensor<T>> conf_parts{inter};
  Tensor<T> gate_logits;
  if (enable_sb) {
    auto s = sb.forward(x, mode);
    require_same_plane(inter, s, "speech branch");
    auto fused = fuse_sb.forward(concat<T>({s, speech.forward(s, mode)}, 1), mode);
    conf_parts.push_back(s);
    gate_logits = fused;
  }
  auto n = nb.forward(x, mode);
  require_same_plane(inter, n, "noisy branch");
  conf_parts.push_back(n);
  if (enable_ib) {
    auto i = ib.forward(x, mode);
    require_same_plane(inter, i, "interference branch");
    auto fused = fuse_ib.forward(concat<T>({i, interference.forward(i, mode)}, 1), mode);
    gate_logits = gate_logits.defined() ? add(gate_logits, fused) : fused;
  }
  auto gate = sigmoid(gate_logits);
  if (gate_out) *gate_out = gate;
  auto conf = confidence.forward(concat<T>(conf_parts, 1), mode);
  return down.forward(mul(conf, gate), mode);
}

template <typename T>
void GldLayer<T>::collect(const std::string& prefix, ParameterList<T>& params) const {
  for (std::size_t i = 0; i < intermediate.size(); ++i) {
    intermediate[i].collect(prefix + ".intermediate." + std::to_string(i), params);
  }
  down.collect(prefix + ".down", params);
  if (!enable_sb && !enable_ib) return;
  nb.collect(prefix + ".nb", params);
  if (enable_sb) {
    sb.collect(prefix + ".sb", params);
    speech.collect(prefix + ".speech_gld", params);
    fuse_sb.collect(prefix + ".fuse_sb", params);
  }
  if (enable_ib) {
    ib.collect(prefix + ".ib", params);
    interference.collect(prefix + ".interference_gld", params);
    fuse_ib.collect(prefix + ".fuse_ib", params);
  }
  confidence.collect(prefix + ".confidence", params);
}

template <typename T>
void GldLayer<T>::collect_buffers(const std::string& prefix, ParameterList<T>& buffers) const {
  for (std::size_t i = 0; i < intermediate.size(); ++i) {
    intermediate[i].collect_buffers(prefix + ".intermediate." + std::to_string(i), buffers);
  }
  down.collect_buffers(prefix + ".down", buffers);
  if (!enable_sb && !enable_ib) return;
  nb.collect_buffers(prefix + ".nb", buffers);
  if (enable_sb) {
    sb.collect_buffers(prefix + ".sb", buffers);
    speech.collect_buffers(prefix + ".speech_gld", buffers);
    fuse_sb.collect_buffers(prefix + ".fuse_sb", buffers);
  }
  if (enable_ib) {
    ib.collect_buffers(prefix + ".ib", buffers);
    interference.collect_buffers(prefix + ".interference_gld", buffers);
    fuse_ib.collect_buffers(prefix + ".fuse_ib", buffers);
  }
  confidence.collect_buffers(prefix + ".confidence", buffers);
}

// ---- bottleneck --------------------------------------------------------------

template <typename T>
Bottleneck<T> Bottleneck<T>::make(std::size_t features, const ModelConfig& cfg, Rng& rng) {
  Bottleneck b;
  const std::size_t h = cfg.lstm_hidden;
  for (std::size_t l = 0; l < cfg.lstm_layers; ++l) {
    const std::size_t in = l == 0 ? features : h;
    b.layers.push_back({init_uniform<T>(Shape{4 * h, in}, h, rng),
                        init_uniform<T>(Shape{4 * h, h}, h, rng),
                        init_uniform<T>(Shape{4 * h}, h, rng)});
  }
  b.proj_w = init_uniform<T>(Shape{features, h}, h, rng);
  b.proj_b = init_uniform<T>(Shape{features}, h, rng);
  return b;
}

template <typename T>
Tensor<T> Bottleneck<T>::forward(const Tensor<T>& x) const {
  if (x.rank() != 4) throw DimensionError("bottleneck: expected N x C x T x F, got " + to_string(x.shape()));
  const std::size_t n = x.dim(0), c = x.dim(1), t = x.dim(2), f = x.dim(3);
  auto seq = reshape(permute(x, {0, 2, 1, 3}), Shape{n, t, c * f});
  for (const auto& l : layers) seq = lstm(seq, l.w_ih, l.w_hh, l.bias);
  auto y = linear(seq, proj_w, proj_b);
  return permute(reshape(y, Shape{n, t, c, f}), {0, 2, 1, 3});
}

template <typename T>
void Bottleneck<T>::collect(const std::string& prefix, ParameterList<T>& params) const {
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const std::string p = prefix + ".lstm." + std::to_string(l);
    params.push_back({p + ".w_ih", layers[l].w_ih});
    params.push_back({p + ".w_hh", layers[l].w_hh});
    params.push_back({p + ".bias", layers[l].bias});
  }
  params.push_back({prefix + ".proj.weight", proj_w});
  params.push_back({prefix + ".proj.bias", proj_b});
}

// ---- network -----------------------------------------------------------------

template <typename T>
GldNet<T>::GldNet(const ModelConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
  cfg_.validate();
  const std::size_t layers = cfg_.encoder_channels.size();
  std::size_t ch = 2;
  for (std::size_t i = 0; i < layers; ++i) {
    Rng rng = component_rng(seed, i);
    encoder.push_back(GldLayer<T>::make(ch, cfg_.encoder_channels[i], cfg_, rng));
    ch = cfg_.encoder_channels[i];
  }
  const std::size_t bottom_f = cfg_.freq_bins() >> layers;
  Rng brng = component_rng(seed, kBottleneckStream);
  bottleneck = Bottleneck<T>::make(ch * bottom_f, cfg_, brng);

  Rng drng = component_rng(seed, kDecoderStream);
  for (std::size_t i = 0; i < layers; ++i) {
    const std::size_t skip_ch = cfg_.encoder_channels[layers - 1 - i];
    const bool last = i + 1 == layers;
    const std::size_t out = last && cfg_.head == OutputHead::kRealImag ? 2 : cfg_.decoder_channels[i];
    decoder.push_back(
        ConvBlock<T>::make(BlockKind::kDeconv, ch + skip_ch, out, upsample_geometry(), drng, last));
    ch = out;
  }

  const std::size_t f = cfg_.freq_bins();
  const std::size_t d = cfg_.head == OutputHead::kMono ? f : 2 * f;
  synthesis.hop = cfg_.stft.hop;
  if (cfg_.decoder_init == DecoderInit::kIstft) {
    synthesis.kernel = cast<T>(init_decoder_as_istft(cfg_.stft, f).kernel).set_requires_grad(true);
  } else {
    Rng srng = component_rng(seed, kSynthesisStream);
    synthesis.kernel = init_uniform<T>(Shape{d, cfg_.stft.win_len}, cfg_.stft.win_len, srng);
  }
}

template <typename T>
Tensor<T> GldNet<T>::analyze(const Tensor<T>& waveforms) const {
  if (waveforms.rank() != 2) {
    throw DimensionError("analyze: expected N x S waveforms, got " + to_string(waveforms.shape()));
  }
  const std::size_t n = waveforms.dim(0), s = waveforms.dim(1);
  const std::size_t f = cfg_.freq_bins(), full = cfg_.stft.bins();
  const std::size_t t = frame_count(s, cfg_.stft);
  Tensor<T> out(Shape{n, 2, t, f});
  std::vector<double> buf(s);
  for (std::size_t b = 0; b < n; ++b) {
    for (std::size_t i = 0; i < s; ++i) buf[i] = static_cast<double>(waveforms[b * s + i]);
    auto spec = stft(buf, cfg_.stft);
    for (std::size_t ti = 0; ti < t; ++ti) {
      for (std::size_t fi = 0; fi < f; ++fi) {
        for (std::size_t plane = 0; plane < 2; ++plane) {
          out[((b * 2 + plane) * t + ti) * f + fi] = static_cast<T>(spec[(ti * full + fi) * 2 + plane]);
        }
      }
    }
  }
  return out;
}

template <typename T>
EncoderOutput<T> GldNet<T>::encoder_forward(const Tensor<T>& spec, Mode mode) {
  if (spec.rank() != 4 || spec.dim(1) != 2 || spec.dim(3) != cfg_.freq_bins()) {
    throw DimensionError("encoder: expected N x 2 x T x " + std::to_string(cfg_.freq_bins()) +
                         " input, got " + to_string(spec.shape()));
  }
  EncoderOutput<T> out;
  Tensor<T> x = spec;
  for (auto& layer : encoder) {
    x = layer.forward(x, mode);
    out.skips.push_back(x);
  }
  out.features = x;
  return out;
}

template <typename T>
Tensor<T> GldNet<T>::bottleneck_forward(const Tensor<T>& x) {
  return bottleneck.forward(x);
}

template <typename T>
Tensor<T> GldNet<T>::decoder_forward(const Tensor<T>& x, const std::vector<Tensor<T>>& skips,
                                     Mode mode) {
  if (skips.size() != decoder.size()) {
    throw DimensionError("decoder: expected " + std::to_string(decoder.size()) + " skips, got " +
                         std::to_string(skips.size()));
  }
  Tensor<T> cur = x;
  for (std::size_t i = 0; i < decoder.size(); ++i) {
    const auto& skip = skips[skips.size() - 1 - i];
    if (skip.rank() != 4 || skip.dim(0) != cur.dim(0) || skip.dim(2) != cur.dim(2) ||
        skip.dim(3) != cur.dim(3)) {
      throw DimensionError("decoder layer " + std::to_string(i) + ": skip " +
                           to_string(skip.shape()) + " does not match input " +
                           to_string(cur.shape()));
    }
    cur = decoder[i].forward(concat<T>({cur, skip}, 1), mode);
  }
  return cur;
}

template <typename T>
Tensor<T> GldNet<T>::frames(const Tensor<T>& decoded) const {
  const std::size_t n = decoded.dim(0), c = decoded.dim(1), t = decoded.dim(2), f = decoded.dim(3);
  if (c == 1) return reshape(decoded, Shape{n, t, f});
  return reshape(permute(decoded, {0, 2, 1, 3}), Shape{n, t, c * f});
}

template <typename T>
Tensor<T> GldNet<T>::forward(const Tensor<T>& noisy, Mode mode) {
  auto enc = encoder_forward(analyze(noisy), mode);
  auto bottom = bottleneck_forward(enc.features);
  auto decoded = decoder_forward(bottom, enc.skips, mode);
  auto wave = apply_learnable_decoder(frames(decoded), synthesis);
  return narrow(wave, 1, 0, noisy.dim(1));
}

template <typename T>
ParameterList<T> GldNet<T>::parameters() const {
  ParameterList<T> params;
  for (std::size_t i = 0; i < encoder.size(); ++i) {
    encoder[i].collect("encoder." + std::to_string(i), params);
  }
  bottleneck.collect("bottleneck", params);
  for (std::size_t i = 0; i < decoder.size(); ++i) {
    decoder[i].collect("decoder." + std::to_string(i), params);
  }
  params.push_back({"synthesis.kernel", synthesis.kernel});
  return params;
}

template <typename T>
ParameterList<T> GldNet<T>::buffers() const {
  ParameterList<T> buffers;
  for (std::size_t i = 0; i < encoder.size(); ++i) {
    encoder[i].collect_buffers("encoder." + std::to_string(i), buffers);
  }
  for (std::size_t i = 0; i < decoder.size(); ++i) {
    decoder[i].collect_buffers("decoder." + std::to_string(i), buffers);
  }
  return buffers;
}

template struct GldLayer<float>;
template struct GldLayer<double>;
template struct Bottleneck<float>;
template struct Bottleneck<double>;
template class GldNet<float>;
template class GldNet<double>;

}  // namespace gldnet

// Copyright 2026 The GLD-Net Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>

#include "gldnet/error.h"
#include "gldnet/signal.h"

namespace gldnet {

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint32_t le32(const unsigned char* p) {
  return std::uint32_t(p[0]) | std::uint32_t(p[1]) << 8 | std::uint32_t(p[2]) << 16 |
         std::uint32_t(p[3]) << 24;
}

std::uint16_t le16(const unsigned char* p) { return std::uint16_t(p[0] | p[1] << 8); }

void put32(std::vector<unsigned char>& b, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) b.push_back(static_cast<unsigned char>(v >> (8 * i)));
}

void put16(std::vector<unsigned char>& b, std::uint16_t v) {
  b.push_back(static_cast<unsigned char>(v));
  b.push_back(static_cast<unsigned char>(v >> 8));
}

}  // namespace

std::vector<double> resample_linear(std::span<const double> x, int from_rate, int to_rate) {
  if (from_rate <= 0 || to_rate <= 0) throw ContractError("resample: rates must be positive");
  if (from_rate == to_rate || x.empty()) return {x.begin(), x.end()};
  const double ratio = static_cast<double>(from_rate) / to_rate;
  const auto out_len = static_cast<std::size_t>(
      std::llround(static_cast<double>(x.size()) * to_rate / from_rate));
  std::vector<double> y(out_len);
  for (std::size_t i = 0; i < out_len; ++i) {
    const double pos = static_cast<double>(i) * ratio;
    const auto lo = std::min(static_cast<std::size_t>(pos), x.size() - 1);
    const std::size_t hi = std::min(lo + 1, x.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    y[i] = x[lo] + (x[hi] - x[lo]) * frac;
  }
  return y;
}

Waveform read_wav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("read_wav: cannot open " + path);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), {});
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw FormatError("read_wav: " + path + " is not a RIFF/WAVE file");
  }
  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  const unsigned char* data = nullptr;
  std::size_t data_len = 0;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::string id(reinterpret_cast<const char*>(bytes.data() + pos), 4);
    const std::uint32_t len = le32(bytes.data() + pos + 4);
    const std::size_t body = pos + 8;
    if (id == "fmt ") {
      if (len < 16 || body + len > bytes.size()) {
        throw FormatError("read_wav: truncated 'fmt ' chunk in " + path);
      }
      format = le16(bytes.data() + body);
      channels = le16(bytes.data() + body + 2);
      rate = le32(bytes.data() + body + 4);
      bits = le16(bytes.data() + body + 14);
      if (format == kFormatExtensible) {
        if (len < 26) throw FormatError("read_wav: truncated extensible 'fmt ' chunk in " + path);
        format = le16(bytes.data() + body + 24);
      }
    } else if (id == "data") {
      data = bytes.data() + body;
      data_len = std::min<std::size_t>(len, bytes.size() - body);
    }
    pos = body + len + (len & 1);
  }
  if (channels == 0 || rate == 0) throw FormatError("read_wav: missing 'fmt ' chunk in " + path);
  if (data == nullptr) throw FormatError("read_wav: missing 'data' chunk in " + path);
  const bool pcm16 = format == kFormatPcm && bits == 16;
  const bool float32 = format == kFormatFloat && bits == 32;
  if (!pcm16 && !float32) {
    throw FormatError("read_wav: unsupported codec in 'fmt ' chunk (format " +
                      std::to_string(format) + ", " + std::to_string(bits) + " bits) in " + path);
  }
  const std::size_t width = bits / 8;
  const std::size_t frames = data_len / (width * channels);
  std::vector<double> mono(frames, 0.0);
  for (std::size_t i = 0; i < frames; ++i) {
    double acc = 0.0;
    for (std::size_t c = 0; c < channels; ++c) {
      const unsigned char* p = data + (i * channels + c) * width;
      if (pcm16) {
        acc += static_cast<std::int16_t>(le16(p)) / 32768.0;
      } else {
        const std::uint32_t raw = le32(p);
        float v;
        std::memcpy(&v, &raw, sizeof v);
        acc += v;
      }
    }
    mono[i] = acc / channels;
  }
  for (double v : mono) {
    if (!std::isfinite(v)) throw FormatError("read_wav: non-finite sample in " + path);
  }
  Waveform w;
  w.samples = resample_linear(mono, static_cast<int>(rate), kSampleRate);
  w.sample_rate = kSampleRate;
  return w;
}

void write_wav(const std::string& path, const Waveform& w) {
  if (w.sample_rate <= 0) throw ContractError("write_wav: sample rate must be positive");
  const auto n = static_cast<std::uint32_t>(w.samples.size());
  std::vector<unsigned char> b;
  b.reserve(44 + 2 * std::size_t(n));
  b.insert(b.end(), {'R', 'I', 'F', 'F'});
  put32(b, 36 + 2 * n);
  b.insert(b.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
  put32(b, 16);
  put16(b, kFormatPcm);
  put16(b, 1);
  put32(b, static_cast<std::uint32_t>(w.sample_rate));
  put32(b, static_cast<std::uint32_t>(w.sample_rate) * 2);
  put16(b, 2);
  put16(b, 16);
  b.insert(b.end(), {'d', 'a', 't', 'a'});
  put32(b, 2 * n);
  for (double v : w.samples) {
    if (!std::isfinite(v)) throw NumericError("write_wav: non-finite sample");
    const double q = std::round(std::clamp(v, -1.0, 1.0) * 32768.0);
    put16(b, static_cast<std::uint16_t>(static_cast<std::int16_t>(std::clamp(q, -32768.0, 32767.0))));
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("write_wav: cannot open " + path);
  out.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
  if (!out) throw IoError("write_wav: failed writing " + path);
}

}  // namespace gldnet

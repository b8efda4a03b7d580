// Copyright 2026 The GLD-Net Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "gldnet/checkpoint.h"

#include <zlib.h>

#include <bit>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>

#include "gldnet/error.h"

namespace gldnet {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes little-endian");

namespace {

constexpr char kMagic[8] = {'G', 'L', 'D', 'N', 'E', 'T', 'C', 'K'};
constexpr std::uint64_t kMaxRank = 8;

class Writer {
 public:
  template <typename V>
  void pod(V v) {
    const auto* p = reinterpret_cast<const char*>(&v);
    bytes_.insert(bytes_.end(), p, p + sizeof(V));
  }
  void str(const std::string& s) {
    pod(static_cast<std::uint32_t>(s.size()));
    bytes_.insert(bytes_.end(), s.begin(), s.end());
  }
  void raw(const char* p, std::size_t n) { bytes_.insert(bytes_.end(), p, p + n); }
  std::vector<char>& bytes() { return bytes_; }

 private:
  std::vector<char> bytes_;
};

class Reader {
 public:
  Reader(const std::vector<char>& bytes, std::size_t end, std::string path)
      : bytes_(bytes), end_(end), path_(std::move(path)) {}

  template <typename V>
  V pod(const char* what) {
    V v;
    std::memcpy(&v, take(sizeof(V), what), sizeof(V));
    return v;
  }
  std::string str(const char* what) {
    const auto n = pod<std::uint32_t>(what);
    const char* p = take(n, what);
    return std::string(p, n);
  }
  const char* take(std::size_t n, const char* what) {
    if (n > end_ - pos_) fail(std::string("truncated while reading ") + what);
    const char* p = bytes_.data() + pos_;
    pos_ += n;
    return p;
  }
  bool done() const { return pos_ == end_; }
  [[noreturn]] void fail(const std::string& msg) const {
    throw FormatError("checkpoint " + path_ + ": " + msg);
  }

 private:
  const std::vector<char>& bytes_;
  std::size_t end_;
  std::size_t pos_ = 0;
  std::string path_;
};

std::uint32_t crc_of(const char* p, std::size_t n) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed in chunks.
  while (n > 0) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(n, 1u << 30));
    crc = crc32(crc, reinterpret_cast<const Bytef*>(p), chunk);
    p += chunk;
    n -= chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

}  // namespace

const CheckpointTensor* CheckpointData::find(const std::string& name) const {
  for (const auto& t : tensors) {
    if (t.name == name) return &t;
  }
  return nullptr;
}

void write_checkpoint(const std::string& path, const CheckpointData& data) {
  if (data.precision != 32 && data.precision != 64) {
    throw ContractError("checkpoint precision must be 32 or 64, got " + std::to_string(data.precision));
  }
  Writer w;
  w.raw(kMagic, sizeof(kMagic));
  w.pod(kCheckpointVersion);
  w.pod(data.precision);
  w.pod(static_cast<std::uint32_t>(data.config.size()));
  for (const auto& [k, v] : data.config) {
    w.str(k);
    w.str(v);
  }
  w.pod(data.step);
  w.pod(static_cast<std::uint32_t>(data.tensors.size()));
  for (const auto& t : data.tensors) {
    std::size_t count = 1;
    for (auto d : t.shape) count *= d;
    if (count != t.values.size()) {
      throw ContractError("checkpoint tensor " + t.name + ": shape " + to_string(t.shape) +
                          " does not match " + std::to_string(t.values.size()) + " values");
    }
    w.str(t.name);
    w.pod(static_cast<std::uint32_t>(t.shape.size()));
    for (auto d : t.shape) w.pod(static_cast<std::uint64_t>(d));
    for (double v : t.values) {
      if (data.precision == 32) {
        w.pod(static_cast<float>(v));
      } else {
        w.pod(v);
      }
    }
  }
  auto& bytes = w.bytes();
  const std::uint32_t crc = crc_of(bytes.data(), bytes.size());
  w.pod(crc);

  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write checkpoint " + tmp);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("short write to checkpoint " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move checkpoint into place at " + path + ": " + ec.message());
}

CheckpointData read_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read checkpoint " + path);
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() < sizeof(kMagic) + 4 || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    throw FormatError("checkpoint " + path + ": not a checkpoint file (bad magic)");
  }
  const std::size_t body = bytes.size() - 4;
  std::uint32_t stored = 0;
  std::memcpy(&stored, bytes.data() + body, 4);
  if (crc_of(bytes.data(), body) != stored) {
    throw ChecksumError("checkpoint " + path + ": checksum mismatch, file is corrupt");
  }

  Reader r(bytes, body, path);
  r.take(sizeof(kMagic), "magic");
  const auto version = r.pod<std::uint32_t>("version");
  if (version != kCheckpointVersion) {
    r.fail("unsupported version " + std::to_string(version) + " (expected " +
           std::to_string(kCheckpointVersion) + ")");
  }
  CheckpointData data;
  data.precision = r.pod<std::uint32_t>("precision");
  if (data.precision != 32 && data.precision != 64) {
    r.fail("invalid precision " + std::to_string(data.precision));
  }
  const auto n_config = r.pod<std::uint32_t>("config count");
  for (std::uint32_t i = 0; i < n_config; ++i) {
    auto key = r.str("config key");
    auto value = r.str("config value");
    if (!data.config.emplace(std::move(key), std::move(value)).second) r.fail("duplicate config key");
  }
  data.step = r.pod<std::uint64_t>("step");
  const auto n_tensors = r.pod<std::uint32_t>("tensor count");
  for (std::uint32_t i = 0; i < n_tensors; ++i) {
    CheckpointTensor t;
    t.name = r.str("tensor name");
    const auto rank = r.pod<std::uint32_t>("tensor rank");
    if (rank > kMaxRank) r.fail("tensor " + t.name + " has implausible rank " + std::to_string(rank));
    std::size_t count = 1;
    for (std::uint32_t d = 0; d < rank; ++d) {
      const auto dim = r.pod<std::uint64_t>("tensor dims");
      t.shape.push_back(static_cast<std::size_t>(dim));
      count *= static_cast<std::size_t>(dim);
    }
    const std::size_t width = data.precision / 8;
    if (count > body / width) r.fail("tensor " + t.name + " larger than the file");
    const char* p = r.take(count * width, "tensor values");
    t.values.resize(count);
    for (std::size_t k = 0; k < count; ++k) {
      if (data.precision == 32) {
        float v;
        std::memcpy(&v, p + k * 4, 4);
        t.values[k] = v;
      } else {
        std::memcpy(&t.values[k], p + k * 8, 8);
      }
    }
    if (data.find(t.name)) r.fail("duplicate tensor " + t.name);
    data.tensors.push_back(std::move(t));
  }
  if (!r.done()) r.fail("trailing bytes after the last tensor");
  return data;
}

template <typename T>
void export_tensors(const ParameterList<T>& list, const std::string& prefix, CheckpointData& out) {
  for (const auto& p : list) {
    CheckpointTensor t{prefix + p.name, p.tensor.shape(), {}};
    t.values.assign(p.tensor.data().begin(), p.tensor.data().end());
    out.tensors.push_back(std::move(t));
  }
}

template <typename T>
void import_tensors(ParameterList<T>& list, const std::string& prefix, const CheckpointData& in) {
  std::vector<const CheckpointTensor*> found;
  for (const auto& p : list) {
    const auto* t = in.find(prefix + p.name);
    if (!t) throw FormatError("checkpoint has no tensor " + prefix + p.name);
    if (t->shape != p.tensor.shape()) {
      throw FormatError("checkpoint tensor " + prefix + p.name + " has shape " + to_string(t->shape) +
                        ", model expects " + to_string(p.tensor.shape()));
    }
    found.push_back(t);
  }
  for (std::size_t i = 0; i < list.size(); ++i) {
    auto dst = list[i].tensor.data();
    for (std::size_t k = 0; k < dst.size(); ++k) dst[k] = static_cast<T>(found[i]->values[k]);
  }
}

template void export_tensors(const ParameterList<float>&, const std::string&, CheckpointData&);
template void export_tensors(const ParameterList<double>&, const std::string&, CheckpointData&);
template void import_tensors(ParameterList<float>&, const std::string&, const CheckpointData&);
template void import_tensors(ParameterList<double>&, const std::string&, const CheckpointData&);

}  // namespace gldnet

// Copyright 2026 The GLD-Net Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gldnet/config.h"
#include "gldnet/parameters.h"
#include "gldnet/tensor.h"

namespace gldnet {

// Binary layout, little-endian:
//   "GLDNETCK" | u32 version | u32 precision (32 or 64) | u32 n | n x (str key, str value)
//   | u64 step | u32 m | m x (str name, u32 rank, rank x u64 dim, raw values) | u32 crc32
// where str is a u32 byte length followed by the bytes, raw values are IEEE floats
// of the stated precision, and the CRC covers every preceding byte.
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointTensor {
  std::string name;
  Shape shape;
  std::vector<double> values;  // widened; exact for either precision
};

struct CheckpointData {
  std::uint32_t precision = 32;
  KeyValues config;
  std::uint64_t step = 0;
  std::vector<CheckpointTensor> tensors;

  const CheckpointTensor* find(const std::string& name) const;
};

// Writes through a temporary file renamed into place. Throws IoError.
void write_checkpoint(const std::string& path, const CheckpointData& data);

// Throws IoError (unreadable), ChecksumError (content damaged) or FormatError.
CheckpointData read_checkpoint(const std::string& path);

template <typename T>
void export_tensors(const ParameterList<T>& list, const std::string& prefix, CheckpointData& out);

// Copies every listed tensor from `in` (looked up as prefix + name). Throws
// FormatError naming the first missing or mis-shaped entry; nothing is
// modified in that case.
template <typename T>
void import_tensors(ParameterList<T>& list, const std::string& prefix, const CheckpointData& in);

}  // namespace gldnet

// Copyright (c) 2026 The partsync Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>
#include <torch/torch.h>

namespace partsync {

/// Portable single-tensor container.
///
/// Byte layout (all integers little-endian):
///
///   offset  size      field
///   0       4         magic "PSTC"
///   4       2         version (currently 1)
///   6       1         dtype tag (see DTypeTag)
///   7       1         rank R
///   8       8*R       dims, u64 each
///   8+8R    N         payload, row-major, N = prod(dims) * sizeof(dtype)
///   8+8R+N  4         CRC-32 (zlib polynomial) of every preceding byte
enum class DTypeTag : std::uint8_t { f32 = 1, f64 = 2, i64 = 3, u8 = 4, i16 = 5 };

inline constexpr std::uint16_t kTensorContainerVersion = 1;

std::vector<std::uint8_t> encode_tensor(const torch::Tensor& tensor);
torch::Tensor decode_tensor(std::span<const std::uint8_t> bytes);

void write_tensor(const std::filesystem::path& path, const torch::Tensor& tensor);
torch::Tensor read_tensor(const std::filesystem::path& path);

/// Named-tensor archive used for checkpoints and multi-tensor outputs.
///
///   magic "PSAR" | u16 version | u16 reserved(0) | u32 meta_len | meta JSON (UTF-8)
///   u32 count | count x { u16 name_len | name | u64 blob_len | PSTC blob }
///   u32 CRC-32 of every preceding byte
///
/// The metadata JSON is serialized with sorted keys, so writing the same archive
/// twice yields identical bytes.
struct Archive {
  nlohmann::json meta = nlohmann::json::object();
  std::vector<std::pair<std::string, torch::Tensor>> tensors;

  void put(std::string name, torch::Tensor tensor);
  bool contains(const std::string& name) const;
  /// Throws FormatError when the entry is absent.
  const torch::Tensor& get(const std::string& name) const;
};

std::vector<std::uint8_t> encode_archive(const Archive& archive);
Archive decode_archive(std::span<const std::uint8_t> bytes);

void write_archive(const std::filesystem::path& path, const Archive& archive);
Archive read_archive(const std::filesystem::path& path);

std::uint32_t crc32(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

/// Copies every parameter and buffer of `module` into `archive` under `prefix`.
void export_module(const torch::nn::Module& module, const std::string& prefix, Archive& archive);
/// Loads parameters and buffers of `module` from `archive`; every entry must exist
/// with a matching shape.
void import_module(torch::nn::Module& module, const std::string& prefix, const Archive& archive);

}  // namespace partsync

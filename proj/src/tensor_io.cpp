// Copyright (c) 2026 The partsync Authors
// SPDX-License-Identifier: Apache-2.0

#include "partsync/tensor_io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>

#include <zlib.h>

#include "partsync/error.hpp"

namespace partsync {

namespace {

constexpr std::array<std::uint8_t, 4> kTensorMagic{'P', 'S', 'T', 'C'};
constexpr std::array<std::uint8_t, 4> kArchiveMagic{'P', 'S', 'A', 'R'};
constexpr std::uint16_t kArchiveVersion = 1;

DTypeTag tag_for(torch::ScalarType type) {
  switch (type) {
    case torch::kFloat32: return DTypeTag::f32;
    case torch::kFloat64: return DTypeTag::f64;
    case torch::kInt64: return DTypeTag::i64;
    case torch::kUInt8: return DTypeTag::u8;
    case torch::kInt16: return DTypeTag::i16;
    default:
      throw FormatError(std::string("unsupported tensor dtype: ") + c10::toString(type));
  }
}

torch::ScalarType type_for(DTypeTag tag) {
  switch (tag) {
    case DTypeTag::f32: return torch::kFloat32;
    case DTypeTag::f64: return torch::kFloat64;
    case DTypeTag::i64: return torch::kInt64;
    case DTypeTag::u8: return torch::kUInt8;
    case DTypeTag::i16: return torch::kInt16;
  }
  throw FormatError("unknown dtype tag " + std::to_string(static_cast<int>(tag)));
}

template <typename T>
void put_le(std::vector<std::uint8_t>& out, T value) {
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<std::uint8_t>((static_cast<std::uint64_t>(value) >> (8 * i)) & 0xffu));
  }
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  template <typename T>
  T le() {
    need(sizeof(T));
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      v |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
    }
    pos_ += sizeof(T);
    return static_cast<T>(v);
  }

  std::span<const std::uint8_t> take(std::size_t n) {
    need(n);
    auto s = bytes_.subspan(pos_, n);
    pos_ += n;
    return s;
  }

  std::size_t pos() const { return pos_; }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (n > bytes_.size() - pos_) throw FormatError("truncated container");
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

void check_crc(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4) throw FormatError("container too short");
  const auto body = bytes.first(bytes.size() - 4);
  Reader tail(bytes.last(4));
  const auto stored = tail.le<std::uint32_t>();
  if (stored != crc32(body)) throw FormatError("CRC mismatch");
}

}  // namespace

std::uint32_t crc32(std::span<const std::uint8_t> bytes) {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed in chunks for very large payloads.
  std::size_t off = 0;
  while (off < bytes.size()) {
    const auto n = static_cast<uInt>(std::min<std::size_t>(bytes.size() - off, 1u << 30));
    crc = ::crc32(crc, bytes.data() + off, n);
    off += n;
  }
  return static_cast<std::uint32_t>(crc);
}

std::vector<std::uint8_t> encode_tensor(const torch::Tensor& tensor) {
  static_assert(std::endian::native == std::endian::little, "payload is written in host order");
  const auto t = tensor.detach().to(torch::kCPU).contiguous();
  const auto tag = tag_for(t.scalar_type());
  if (t.dim() > 255) throw FormatError("tensor rank exceeds 255");

  std::vector<std::uint8_t> out(kTensorMagic.begin(), kTensorMagic.end());
  put_le<std::uint16_t>(out, kTensorContainerVersion);
  put_le<std::uint8_t>(out, static_cast<std::uint8_t>(tag));
  put_le<std::uint8_t>(out, static_cast<std::uint8_t>(t.dim()));
  for (auto d : t.sizes()) put_le<std::uint64_t>(out, static_cast<std::uint64_t>(d));
  const auto nbytes = t.numel() * t.element_size();
  const auto* data = static_cast<const std::uint8_t*>(t.data_ptr());
  out.insert(out.end(), data, data + nbytes);
  put_le<std::uint32_t>(out, crc32(out));
  return out;
}

torch::Tensor decode_tensor(std::span<const std::uint8_t> bytes) {
  check_crc(bytes);
  Reader r(bytes.first(bytes.size() - 4));
  auto magic = r.take(4);
  if (!std::equal(magic.begin(), magic.end(), kTensorMagic.begin())) {
    throw FormatError("bad tensor container magic");
  }
  const auto version = r.le<std::uint16_t>();
  if (version != kTensorContainerVersion) {
    throw FormatError("unsupported tensor container version " + std::to_string(version));
  }
  const auto type = type_for(static_cast<DTypeTag>(r.le<std::uint8_t>()));
  const auto rank = r.le<std::uint8_t>();
  std::vector<std::int64_t> shape(rank);
  std::int64_t numel = 1;
  for (auto& d : shape) {
    d = static_cast<std::int64_t>(r.le<std::uint64_t>());
    numel *= d;
  }
  auto out = torch::empty(shape, torch::TensorOptions().dtype(type));
  const auto nbytes = static_cast<std::size_t>(numel * out.element_size());
  if (r.remaining() != nbytes) throw FormatError("payload length does not match shape");
  auto payload = r.take(nbytes);
  if (nbytes > 0) std::memcpy(out.data_ptr(), payload.data(), nbytes);
  return out;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingInputError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("short write to " + path.string());
}

void write_tensor(const std::filesystem::path& path, const torch::Tensor& tensor) {
  write_file_bytes(path, encode_tensor(tensor));
}

torch::Tensor read_tensor(const std::filesystem::path& path) {
  return decode_tensor(read_file_bytes(path));
}

void Archive::put(std::string name, torch::Tensor tensor) {
  for (auto& [n, t] : tensors) {
    if (n == name) {
      t = std::move(tensor);
      return;
    }
  }
  tensors.emplace_back(std::move(name), std::move(tensor));
}

bool Archive::contains(const std::string& name) const {
  return std::any_of(tensors.begin(), tensors.end(), [&](const auto& e) { return e.first == name; });
}

const torch::Tensor& Archive::get(const std::string& name) const {
  for (const auto& [n, t] : tensors) {
    if (n == name) return t;
  }
  throw FormatError("archive has no entry '" + name + "'");
}

std::vector<std::uint8_t> encode_archive(const Archive& archive) {
  std::vector<std::uint8_t> out(kArchiveMagic.begin(), kArchiveMagic.end());
  put_le<std::uint16_t>(out, kArchiveVersion);
  put_le<std::uint16_t>(out, 0);
  const auto meta = archive.meta.dump();
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(meta.size()));
  out.insert(out.end(), meta.begin(), meta.end());
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(archive.tensors.size()));
  for (const auto& [name, tensor] : archive.tensors) {
    if (name.size() > 0xffff) throw FormatError("archive entry name too long");
    put_le<std::uint16_t>(out, static_cast<std::uint16_t>(name.size()));
    out.insert(out.end(), name.begin(), name.end());
    const auto blob = encode_tensor(tensor);
    put_le<std::uint64_t>(out, blob.size());
    out.insert(out.end(), blob.begin(), blob.end());
  }
  put_le<std::uint32_t>(out, crc32(out));
  return out;
}

Archive decode_archive(std::span<const std::uint8_t> bytes) {
  check_crc(bytes);
  Reader r(bytes.first(bytes.size() - 4));
  auto magic = r.take(4);
  if (!std::equal(magic.begin(), magic.end(), kArchiveMagic.begin())) {
    throw FormatError("bad archive magic");
  }
  const auto version = r.le<std::uint16_t>();
  if (version != kArchiveVersion) throw FormatError("unsupported archive version");
  r.le<std::uint16_t>();
  const auto meta_len = r.le<std::uint32_t>();
  auto meta = r.take(meta_len);
  Archive archive;
  try {
    archive.meta = nlohmann::json::parse(meta.begin(), meta.end());
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("archive metadata: ") + e.what());
  }
  const auto count = r.le<std::uint32_t>();
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto name_len = r.le<std::uint16_t>();
    auto name = r.take(name_len);
    const auto blob_len = r.le<std::uint64_t>();
    auto blob = r.take(static_cast<std::size_t>(blob_len));
    archive.tensors.emplace_back(std::string(name.begin(), name.end()), decode_tensor(blob));
  }
  if (r.remaining() != 0) throw FormatError("trailing bytes in archive");
  return archive;
}

void write_archive(const std::filesystem::path& path, const Archive& archive) {
  write_file_bytes(path, encode_archive(archive));
}

Archive read_archive(const std::filesystem::path& path) {
  return decode_archive(read_file_bytes(path));
}

void export_module(const torch::nn::Module& module, const std::string& prefix, Archive& archive) {
  for (const auto& p : module.named_parameters(true)) archive.put(prefix + p.key(), p.value().detach().clone());
  for (const auto& b : module.named_buffers(true)) archive.put(prefix + b.key(), b.value().detach().clone());
}

void import_module(torch::nn::Module& module, const std::string& prefix, const Archive& archive) {
  torch::NoGradGuard no_grad;
  auto load = [&](const std::string& key, torch::Tensor& dst) {
    const auto& src = archive.get(prefix + key);
    if (src.sizes() != dst.sizes()) {
      throw FormatError("shape mismatch for '" + prefix + key + "'");
    }
    dst.copy_(src);
  };
  for (auto& p : module.named_parameters(true)) load(p.key(), p.value());
  for (auto& b : module.named_buffers(true)) load(b.key(), b.value());
}

}  // namespace partsync

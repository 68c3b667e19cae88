// Copyright 2026 The NDDR-CNN Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "nddr/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "nddr/error.hpp"

namespace nddr {
namespace {

constexpr char kMagic[4] = {'N', 'D', 'D', 'R'};

template <typename U>
void put_le(std::string& out, U value) {
  for (std::size_t i = 0; i < sizeof(U); ++i)
    out.push_back(static_cast<char>((value >> (8 * i)) & 0xff));
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  template <typename U>
  U get(const char* what) {
    need(sizeof(U), what);
    U value = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i)
      value |= static_cast<U>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += sizeof(U);
    return value;
  }

  std::string_view take(std::size_t n, const char* what) {
    need(n, what);
    auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  bool done() const { return pos_ == bytes_.size(); }
  std::size_t pos() const { return pos_; }

 private:
  void need(std::size_t n, const char* what) {
    if (bytes_.size() - pos_ < n)
      fail(ErrorCode::kFormat, "truncated checkpoint: need ", n, " bytes for ", what,
           " at offset ", pos_, ", only ", bytes_.size() - pos_, " left");
  }
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::uint64_t CheckpointRecord::numel() const {
  std::uint64_t n = 1;
  for (auto d : dims) n *= d;
  return n;
}

template <typename T>
std::vector<T> CheckpointRecord::values() const {
  if (dtype == DType::kF32) return std::vector<T>(f32.begin(), f32.end());
  return std::vector<T>(f64.begin(), f64.end());
}

Shape CheckpointRecord::shape() const {
  require(dims.size() <= 4, ErrorCode::kFormat, "record '", name, "' has ", dims.size(),
          " dims; tensors have at most 4");
  std::int64_t d[4] = {1, 1, 1, 1};
  const std::size_t off = 4 - dims.size();
  for (std::size_t i = 0; i < dims.size(); ++i) d[off + i] = static_cast<std::int64_t>(dims[i]);
  return Shape{d[0], d[1], d[2], d[3]};
}

const CheckpointRecord* Checkpoint::find(std::string_view name) const {
  for (const auto& r : records_)
    if (r.name == name) return &r;
  return nullptr;
}

void Checkpoint::add(CheckpointRecord record) {
  require(find(record.name) == nullptr, ErrorCode::kInvalidArgument,
          "duplicate checkpoint record '", record.name, "'");
  const std::uint64_t n = record.numel();
  const std::uint64_t have = record.dtype == DType::kF32 ? record.f32.size() : record.f64.size();
  require(n == have, ErrorCode::kShapeMismatch, "record '", record.name, "' declares ", n,
          " values but holds ", have);
  records_.push_back(std::move(record));
}

template <typename T>
void Checkpoint::add_tensor(const std::string& name, const Tensor<T>& t) {
  CheckpointRecord r;
  r.name = name;
  r.dtype = dtype_of<T>();
  const Shape& s = t.shape();
  r.dims = {static_cast<std::uint64_t>(s.n), static_cast<std::uint64_t>(s.h),
            static_cast<std::uint64_t>(s.w), static_cast<std::uint64_t>(s.c)};
  if constexpr (std::is_same_v<T, float>)
    r.f32.assign(t.data().begin(), t.data().end());
  else
    r.f64.assign(t.data().begin(), t.data().end());
  add(std::move(r));
}

void Checkpoint::add_scalar(const std::string& name, double value) {
  CheckpointRecord r;
  r.name = name;
  r.dtype = DType::kF64;
  r.f64 = {value};
  add(std::move(r));
}

std::optional<double> Checkpoint::scalar(std::string_view name) const {
  const auto* r = find(name);
  if (r == nullptr || r->numel() != 1) return std::nullopt;
  return r->dtype == DType::kF32 ? static_cast<double>(r->f32[0]) : r->f64[0];
}

std::string Checkpoint::encode() const {
  std::string out(kMagic, 4);
  put_le<std::uint32_t>(out, kCheckpointVersion);
  put_le<std::uint64_t>(out, records_.size());
  for (const auto& r : records_) {
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(r.name.size()));
    out += r.name;
    out.push_back(static_cast<char>(r.dtype));
    out.push_back(static_cast<char>(r.dims.size()));
    for (auto d : r.dims) put_le<std::uint64_t>(out, d);
    if (r.dtype == DType::kF32) {
      for (float v : r.f32) put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(v));
    } else {
      for (double v : r.f64) put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
    }
  }
  return out;
}

Checkpoint Checkpoint::decode(std::string_view bytes) {
  Reader in(bytes);
  const auto magic = in.take(4, "magic");
  if (std::memcmp(magic.data(), kMagic, 4) != 0)
    fail(ErrorCode::kFormat, "bad checkpoint magic: expected \"NDDR\"");
  const auto version = in.get<std::uint32_t>("version");
  require(version == kCheckpointVersion, ErrorCode::kFormat, "unsupported checkpoint version ",
          version, " (this build reads version ", kCheckpointVersion, ")");
  const auto count = in.get<std::uint64_t>("record count");
  Checkpoint ck;
  for (std::uint64_t i = 0; i < count; ++i) {
    CheckpointRecord r;
    const auto len = in.get<std::uint32_t>("name length");
    r.name = std::string(in.take(len, "record name"));
    const auto tag = in.get<std::uint8_t>("dtype tag");
    require(tag == 1 || tag == 2, ErrorCode::kFormat, "record '", r.name,
            "' has unknown dtype tag ", static_cast<int>(tag));
    r.dtype = static_cast<DType>(tag);
    const auto ndim = in.get<std::uint8_t>("ndim");
    for (int d = 0; d < ndim; ++d) r.dims.push_back(in.get<std::uint64_t>("dim"));
    const std::uint64_t n = r.numel();
    const std::size_t width = r.dtype == DType::kF32 ? 4 : 8;
    require(n <= (bytes.size() - in.pos()) / width, ErrorCode::kFormat,
            "truncated checkpoint: record '", r.name, "' needs ", n, " values");
    if (r.dtype == DType::kF32) {
      r.f32.resize(n);
      for (auto& v : r.f32) v = std::bit_cast<float>(in.get<std::uint32_t>("value"));
    } else {
      r.f64.resize(n);
      for (auto& v : r.f64) v = std::bit_cast<double>(in.get<std::uint64_t>("value"));
    }
    if (ck.find(r.name) != nullptr)
      fail(ErrorCode::kFormat, "duplicate record name '", r.name, "' in checkpoint");
    ck.records_.push_back(std::move(r));
  }
  require(in.done(), ErrorCode::kFormat, "trailing bytes after ", count, " checkpoint records");
  return ck;
}

void Checkpoint::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), ErrorCode::kIo, "cannot open '", path.string(),
          "' for writing");
  const std::string bytes = encode();
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  require(static_cast<bool>(out), ErrorCode::kIo, "failed writing '", path.string(), "'");
}

Checkpoint Checkpoint::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::kIo, "cannot open '", path.string(), "'");
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return decode(bytes);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

template <typename T>
Tensor<T> record_to_tensor(const CheckpointRecord& r) {
  return Tensor<T>(r.shape(), r.values<T>());
}

template std::vector<float> CheckpointRecord::values<float>() const;
template std::vector<double> CheckpointRecord::values<double>() const;
template void Checkpoint::add_tensor(const std::string&, const Tensor<float>&);
template void Checkpoint::add_tensor(const std::string&, const Tensor<double>&);
template Tensor<float> record_to_tensor(const CheckpointRecord&);
template Tensor<double> record_to_tensor(const CheckpointRecord&);

}  // namespace nddr

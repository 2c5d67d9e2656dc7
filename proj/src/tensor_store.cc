// Copyright 2026 The latprune Authors
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

#include "latprune/tensor_store.h"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "latprune/error.h"

namespace latprune {
namespace {

static_assert(std::endian::native == std::endian::little,
              "SPLW decoding assumes a little-endian host");

constexpr char kMagic[4] = {'S', 'P', 'L', 'W'};

class Reader {
 public:
  explicit Reader(std::span<const std::byte> bytes) : bytes_(bytes) {}

  template <typename T>
  T Read(const char* what) {
    T value;
    Copy(&value, sizeof(T), what);
    return value;
  }

  void Copy(void* dst, size_t n, const char* what) {
    if (bytes_.size() - pos_ < n) {
      ThrowInvalid(std::string("truncated container while reading ") + what);
    }
    std::memcpy(dst, bytes_.data() + pos_, n);
    pos_ += n;
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  std::span<const std::byte> bytes_;
  size_t pos_ = 0;
};

template <typename T>
void Append(std::vector<std::byte>& out, const T& value) {
  const auto* p = reinterpret_cast<const std::byte*>(&value);
  out.insert(out.end(), p, p + sizeof(T));
}

}  // namespace

Tensor4::Tensor4(std::array<uint32_t, 4> s, std::vector<float> values)
    : shape(s), data(std::move(values)) {
  if (data.size() != size_t{s[0]} * s[1] * s[2] * s[3]) {
    ThrowInvalid("tensor payload does not match its shape");
  }
}

Tensor4 Tensor4::Zeros(std::array<uint32_t, 4> s) {
  return Tensor4(s, std::vector<float>(size_t{s[0]} * s[1] * s[2] * s[3], 0.0f));
}

TensorStore DecodeTensors(std::span<const std::byte> bytes) {
  Reader reader(bytes);
  char magic[4];
  reader.Copy(magic, 4, "magic");
  if (std::memcmp(magic, kMagic, 4) != 0) ThrowInvalid("bad magic");
  const auto version = reader.Read<uint32_t>("version");
  if (version != kSplwVersion) {
    ThrowInvalid("unsupported version " + std::to_string(version));
  }
  const auto count = reader.Read<uint32_t>("tensor count");

  TensorStore store;
  for (uint32_t t = 0; t < count; ++t) {
    const auto name_len = reader.Read<uint16_t>("name length");
    std::string name(name_len, '\0');
    reader.Copy(name.data(), name_len, "name");
    const auto rank = reader.Read<uint8_t>("rank");
    if (rank != 4) {
      ThrowInvalid("tensor " + name + ": rank " + std::to_string(rank) + " (expected 4)");
    }
    std::array<uint32_t, 4> shape;
    for (auto& d : shape) d = reader.Read<uint32_t>("dims");
    const auto dtype = reader.Read<uint8_t>("dtype");
    if (dtype != 0) {
      ThrowInvalid("tensor " + name + ": unsupported dtype " + std::to_string(dtype));
    }
    const uint64_t elements = uint64_t{shape[0]} * shape[1] * shape[2] * shape[3];
    if (elements * sizeof(float) > bytes.size()) {
      ThrowInvalid("truncated container while reading tensor " + name);
    }
    std::vector<float> values(elements);
    reader.Copy(values.data(), elements * sizeof(float), "payload");
    for (size_t i = 0; i < values.size(); ++i) {
      if (!std::isfinite(values[i])) {
        ThrowInvalid("tensor " + name + ": non-finite value at flat index " +
                     std::to_string(i));
      }
    }
    if (store.contains(name)) ThrowInvalid("duplicate tensor " + name);
    store.emplace(std::move(name), Tensor4(shape, std::move(values)));
  }
  if (!reader.done()) ThrowInvalid("trailing bytes after last tensor");
  return store;
}

void CheckTensorsAgainst(const TensorStore& store, const NetworkSpec& spec) {
  for (const LayerSpec& layer : spec.layers()) {
    auto it = store.find(layer.id);
    if (it == store.end()) ThrowInvalid("missing tensor " + layer.id);
    const std::array<uint32_t, 4> want = {
        static_cast<uint32_t>(layer.out_channels),
        static_cast<uint32_t>(layer.in_channels),
        static_cast<uint32_t>(layer.kernel_h), static_cast<uint32_t>(layer.kernel_w)};
    if (it->second.shape != want) {
      auto fmt = [](const std::array<uint32_t, 4>& s) {
        return "[" + std::to_string(s[0]) + "," + std::to_string(s[1]) + "," +
               std::to_string(s[2]) + "," + std::to_string(s[3]) + "]";
      };
      ThrowInvalid("tensor " + layer.id + ": shape mismatch, got " +
                   fmt(it->second.shape) + " expected " + fmt(want));
    }
  }
  for (const auto& [name, tensor] : store) {
    if (!spec.Find(name)) ThrowInvalid("tensor " + name + " does not name a layer");
  }
}

TensorStore LoadTensors(std::span<const std::byte> bytes, const NetworkSpec& spec) {
  TensorStore store = DecodeTensors(bytes);
  CheckTensorsAgainst(store, spec);
  return store;
}

TensorStore LoadTensorFile(const std::filesystem::path& path, const NetworkSpec& spec) {
  std::ifstream in(path, std::ios::binary);
  if (!in) ThrowInvalid("cannot open weights file " + path.string());
  std::vector<char> raw((std::istreambuf_iterator<char>(in)),
                        std::istreambuf_iterator<char>());
  return LoadTensors(std::as_bytes(std::span(raw)), spec);
}

std::vector<std::byte> EncodeTensors(const TensorStore& store) {
  std::vector<std::byte> out;
  for (char c : kMagic) out.push_back(static_cast<std::byte>(c));
  Append(out, kSplwVersion);
  Append(out, static_cast<uint32_t>(store.size()));
  for (const auto& [name, tensor] : store) {
    if (name.size() > UINT16_MAX) ThrowInvalid("tensor name too long: " + name);
    Append(out, static_cast<uint16_t>(name.size()));
    for (char c : name) out.push_back(static_cast<std::byte>(c));
    Append(out, uint8_t{4});
    for (uint32_t d : tensor.shape) Append(out, d);
    Append(out, uint8_t{0});
    const auto* p = reinterpret_cast<const std::byte*>(tensor.data.data());
    out.insert(out.end(), p, p + tensor.data.size() * sizeof(float));
  }
  return out;
}

}  // namespace latprune

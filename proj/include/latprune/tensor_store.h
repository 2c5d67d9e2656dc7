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

#ifndef LATPRUNE_TENSOR_STORE_H_
#define LATPRUNE_TENSOR_STORE_H_

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "latprune/network.h"

namespace latprune {

// Dense row-major weight tensor with shape [out, in, kh, kw].
struct Tensor4 {
  std::array<uint32_t, 4> shape{};
  std::vector<float> data;

  Tensor4() = default;
  Tensor4(std::array<uint32_t, 4> s, std::vector<float> values);
  static Tensor4 Zeros(std::array<uint32_t, 4> s);

  size_t out() const { return shape[0]; }
  size_t in() const { return shape[1]; }
  size_t FilterSize() const { return size_t{shape[1]} * shape[2] * shape[3]; }
  size_t KernelSize() const { return size_t{shape[2]} * shape[3]; }

  float& at(size_t o, size_t i, size_t h, size_t w) {
    return data[((o * shape[1] + i) * shape[2] + h) * shape[3] + w];
  }
  float at(size_t o, size_t i, size_t h, size_t w) const {
    return data[((o * shape[1] + i) * shape[2] + h) * shape[3] + w];
  }
};

// Named weight tensors, one per layer.
using TensorStore = std::map<std::string, Tensor4, std::less<>>;

// SPLW container: little-endian; "SPLW", u32 version (=1), u32 count, then
// per tensor: u16 name length, UTF-8 name, u8 rank (=4), 4 x u32 dims,
// u8 dtype (=0, f32), row-major f32 payload.
inline constexpr uint32_t kSplwVersion = 1;

// Decodes a container. Throws on bad magic/version, truncation, duplicate
// names, or any non-finite value (naming the tensor and flat index).
TensorStore DecodeTensors(std::span<const std::byte> bytes);

// Checks that every layer has a tensor of exactly [out, in, kh, kw] and that
// no tensor names an unknown layer.
void CheckTensorsAgainst(const TensorStore& store, const NetworkSpec& spec);

TensorStore LoadTensors(std::span<const std::byte> bytes, const NetworkSpec& spec);
TensorStore LoadTensorFile(const std::filesystem::path& path, const NetworkSpec& spec);

std::vector<std::byte> EncodeTensors(const TensorStore& store);

}  // namespace latprune

#endif  // LATPRUNE_TENSOR_STORE_H_

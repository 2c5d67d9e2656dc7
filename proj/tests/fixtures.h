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

// Hand-written network specs and seeded weights shared by the tests.

#ifndef LATPRUNE_TESTS_FIXTURES_H_
#define LATPRUNE_TESTS_FIXTURES_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"
#include "latprune/latency.h"
#include "latprune/network.h"
#include "latprune/tensor_store.h"

namespace latprune::testing {

LayerSpec Conv(std::string id, int out, int kernel, int spatial,
               std::vector<Producer> producers,
               std::optional<std::string> coupling = std::nullopt);
LayerSpec Dense(std::string id, int out, std::vector<Producer> producers);

std::vector<Producer> From(const std::string& id);
std::vector<Producer> AddOf(const std::vector<std::string>& ids);
std::vector<Producer> ConcatOf(const std::vector<std::string>& ids);

// A chain of convolutions: input has widths[0] channels and layer i
// ("conv<i+1>") has widths[i+1] filters.
NetworkSpec ChainSpec(const std::vector<int>& widths, int kernel = 1, int spatial = 1);

// CIFAR-style ResNet-18 (widths 64..512, 1x1 projection shortcuts) with every
// residual add expressed as a coupling group.
NetworkSpec ResNet18Spec();
// CIFAR ResNet-56 (three stages of nine basic blocks, widths 16/32/64).
NetworkSpec ResNet56Spec();

// Gaussian weights drawn from a fixed seed, one tensor per layer.
TensorStore RandomWeights(const NetworkSpec& spec, uint64_t seed);
// Gaussian weights whose filters additionally carry a random log-normal gain.
TensorStore GainWeights(const NetworkSpec& spec, uint64_t seed, double sigma);

// alpha = 1e-6 ms per MAC, beta = 1e-5 ms per output element.
CostModel DefaultCostModel();

// A fresh directory under the system temp dir, removed on destruction.
class ScratchDir {
 public:
  ScratchDir();
  ~ScratchDir();
  ScratchDir(const ScratchDir&) = delete;
  ScratchDir& operator=(const ScratchDir&) = delete;
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

void WriteFile(const std::filesystem::path& path, const std::string& contents);
std::string ReadFile(const std::filesystem::path& path);
void WriteSpec(const std::filesystem::path& path, const NetworkSpec& spec);
void WriteWeights(const std::filesystem::path& path, const TensorStore& store);

// Spearman rank correlation with average ranks for ties.
double Spearman(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace latprune::testing

#endif  // LATPRUNE_TESTS_FIXTURES_H_

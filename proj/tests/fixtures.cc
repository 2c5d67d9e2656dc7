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

#include "fixtures.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <utility>

namespace latprune::testing {

LayerSpec Conv(std::string id, int out, int kernel, int spatial,
               std::vector<Producer> producers, std::optional<std::string> coupling) {
  LayerSpec layer;
  layer.id = std::move(id);
  layer.kind = LayerKind::kConv;
  layer.out_channels = out;
  layer.kernel_h = kernel;
  layer.kernel_w = kernel;
  layer.out_h = spatial;
  layer.out_w = spatial;
  layer.producers = std::move(producers);
  layer.coupling_group = std::move(coupling);
  return layer;
}

LayerSpec Dense(std::string id, int out, std::vector<Producer> producers) {
  LayerSpec layer = Conv(std::move(id), out, 1, 1, std::move(producers));
  layer.kind = LayerKind::kDense;
  return layer;
}

std::vector<Producer> From(const std::string& id) { return {{id, Combine::kSingle}}; }

std::vector<Producer> AddOf(const std::vector<std::string>& ids) {
  std::vector<Producer> out;
  for (const auto& id : ids) out.push_back({id, Combine::kAdd});
  return out;
}

std::vector<Producer> ConcatOf(const std::vector<std::string>& ids) {
  std::vector<Producer> out;
  for (const auto& id : ids) out.push_back({id, Combine::kConcat});
  return out;
}

NetworkSpec ChainSpec(const std::vector<int>& widths, int kernel, int spatial) {
  std::vector<LayerSpec> layers;
  std::string prev(kInputId);
  for (size_t i = 1; i < widths.size(); ++i) {
    std::string id = "conv" + std::to_string(i);
    layers.push_back(Conv(id, widths[i], kernel, spatial, From(prev)));
    prev = id;
  }
  return NetworkSpec::Create("chain", {widths[0], spatial, spatial}, std::move(layers));
}

namespace {

// Emits the basic blocks of one residual stage. `stream` holds the layers
// whose sum is the stage input; it is replaced by the stage output.
void ResidualStage(std::vector<LayerSpec>& layers, std::vector<std::string>& stream,
                   const std::string& prefix, int blocks, int width, int spatial,
                   bool project) {
  const std::string group = prefix;
  for (int b = 0; b < blocks; ++b) {
    const std::string name = prefix + "b" + std::to_string(b);
    auto input = [&] { return stream.size() == 1 ? From(stream[0]) : AddOf(stream); };
    layers.push_back(Conv(name + "_a", width, 3, spatial, input()));
    if (b == 0 && project) {
      layers.push_back(Conv(name + "_sc", width, 1, spatial, input(), group));
      stream = {name + "_sc"};
    }
    layers.push_back(Conv(name + "_b", width, 3, spatial, From(name + "_a"), group));
    stream.push_back(name + "_b");
  }
}

}  // namespace

NetworkSpec ResNet18Spec() {
  std::vector<LayerSpec> layers;
  layers.push_back(Conv("conv1", 64, 3, 32, From(std::string(kInputId)), "layer1"));
  std::vector<std::string> stream = {"conv1"};
  ResidualStage(layers, stream, "layer1", 2, 64, 32, false);
  ResidualStage(layers, stream, "layer2", 2, 128, 16, true);
  ResidualStage(layers, stream, "layer3", 2, 256, 8, true);
  ResidualStage(layers, stream, "layer4", 2, 512, 4, true);
  layers.push_back(Dense("fc", 10, AddOf(stream)));
  return NetworkSpec::Create("resnet18-cifar", {3, 32, 32}, std::move(layers));
}

NetworkSpec ResNet56Spec() {
  std::vector<LayerSpec> layers;
  layers.push_back(Conv("conv1", 16, 3, 32, From(std::string(kInputId)), "stage1"));
  std::vector<std::string> stream = {"conv1"};
  ResidualStage(layers, stream, "stage1", 9, 16, 32, false);
  ResidualStage(layers, stream, "stage2", 9, 32, 16, true);
  ResidualStage(layers, stream, "stage3", 9, 64, 8, true);
  layers.push_back(Dense("fc", 10, AddOf(stream)));
  return NetworkSpec::Create("resnet56-cifar", {3, 32, 32}, std::move(layers));
}

namespace {

Tensor4 GaussianTensor(const LayerSpec& layer, std::mt19937_64& rng) {
  const std::array<uint32_t, 4> shape = {
      static_cast<uint32_t>(layer.out_channels), static_cast<uint32_t>(layer.in_channels),
      static_cast<uint32_t>(layer.kernel_h), static_cast<uint32_t>(layer.kernel_w)};
  Tensor4 t = Tensor4::Zeros(shape);
  const double fan_in = static_cast<double>(t.FilterSize());
  std::normal_distribution<float> dist(0.0f, static_cast<float>(std::sqrt(2.0 / fan_in)));
  for (float& v : t.data) v = dist(rng);
  return t;
}

}  // namespace

TensorStore RandomWeights(const NetworkSpec& spec, uint64_t seed) {
  std::mt19937_64 rng(seed);
  TensorStore store;
  for (const LayerSpec& layer : spec.layers()) store[layer.id] = GaussianTensor(layer, rng);
  return store;
}

TensorStore GainWeights(const NetworkSpec& spec, uint64_t seed, double sigma) {
  std::mt19937_64 rng(seed);
  std::lognormal_distribution<double> gain(0.0, sigma);
  TensorStore store;
  for (const LayerSpec& layer : spec.layers()) {
    Tensor4 t = GaussianTensor(layer, rng);
    const size_t n = t.FilterSize();
    for (size_t k = 0; k < t.out(); ++k) {
      const float g = static_cast<float>(gain(rng));
      for (size_t i = 0; i < n; ++i) t.data[k * n + i] *= g;
    }
    store[layer.id] = std::move(t);
  }
  return store;
}

CostModel DefaultCostModel() { return CostModel(LinearCost{1e-8, 1e-7, 0.001}); }

ScratchDir::ScratchDir() {
  static int counter = 0;
  std::random_device rd;
  path_ = std::filesystem::temp_directory_path() /
          ("latprune-test-" + std::to_string(rd()) + "-" + std::to_string(counter++));
  std::filesystem::create_directories(path_);
}

ScratchDir::~ScratchDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

void WriteFile(const std::filesystem::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  out << contents;
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

std::string ReadFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void WriteSpec(const std::filesystem::path& path, const NetworkSpec& spec) {
  WriteFile(path, spec.ToJson().dump(2));
}

void WriteWeights(const std::filesystem::path& path, const TensorStore& store) {
  const std::vector<std::byte> bytes = EncodeTensors(store);
  WriteFile(path, std::string(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

namespace {

std::vector<double> AverageRanks(const std::vector<double>& x) {
  std::vector<size_t> order(x.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) { return x[a] < x[b]; });
  std::vector<double> rank(x.size());
  for (size_t i = 0; i < order.size();) {
    size_t j = i;
    while (j + 1 < order.size() && x[order[j + 1]] == x[order[i]]) ++j;
    const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (size_t k = i; k <= j; ++k) rank[order[k]] = avg;
    i = j + 1;
  }
  return rank;
}

}  // namespace

double Spearman(const std::vector<double>& x, const std::vector<double>& y) {
  const std::vector<double> rx = AverageRanks(x);
  const std::vector<double> ry = AverageRanks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0 || syy == 0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace latprune::testing

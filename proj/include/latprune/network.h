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

#ifndef LATPRUNE_NETWORK_H_
#define LATPRUNE_NETWORK_H_

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace latprune {

enum class LayerKind { kConv, kDense };

// How a layer combines the outputs of its producers into its input.
enum class Combine { kSingle, kAdd, kConcat };

// Reserved producer id for the network input.
inline constexpr std::string_view kInputId = "input";
inline constexpr int kInputIndex = -1;

struct Producer {
  std::string from;
  Combine combine = Combine::kSingle;
};

struct InputSpec {
  int channels = 0;
  int h = 0;
  int w = 0;
};

struct LayerSpec {
  std::string id;
  LayerKind kind = LayerKind::kConv;
  int out_channels = 0;
  int kernel_h = 1;
  int kernel_w = 1;
  int out_h = 1;
  int out_w = 1;
  std::vector<Producer> producers;
  std::optional<std::string> coupling_group;

  // Filled in by NetworkSpec validation; never read from the input file.
  int in_channels = 0;
  Combine combine = Combine::kSingle;
  std::vector<int> producer_index;  // kInputIndex for the network input

  int64_t KernelArea() const { return int64_t{kernel_h} * kernel_w; }
  int64_t OutputArea() const { return int64_t{out_h} * out_w; }
};

// Layer `consumer` reads filter k of a producer as its input channel
// `offset + k`.
struct ConsumerEdge {
  int consumer = 0;
  int offset = 0;
};

// Layers that are pruned together. Uncoupled layers form singleton units keyed
// by their id; coupled layers share a unit keyed by the group name.
struct PruneUnit {
  std::string key;
  std::vector<int> members;  // layer indices, topological order
  int width = 0;
};

// Surviving original filter indices per prune unit, each sorted ascending.
using Survivors = std::vector<std::vector<int>>;

// Kept filter counts by layer id. Layers absent from the map are at full
// width.
using KeptCounts = std::map<std::string, int>;

class NetworkSpec {
 public:
  NetworkSpec() = default;

  // Validates the graph, establishes a topological order and derives
  // in_channels. Throws Error(kInvalidInput) naming the offending layer.
  static NetworkSpec Create(std::string name, InputSpec input,
                            std::vector<LayerSpec> layers);

  const std::string& name() const { return name_; }
  const InputSpec& input() const { return input_; }
  const std::vector<LayerSpec>& layers() const { return layers_; }
  const LayerSpec& layer(int index) const { return layers_.at(index); }
  int num_layers() const { return static_cast<int>(layers_.size()); }

  std::optional<int> Find(std::string_view id) const;
  int IndexOf(std::string_view id) const;  // throws on unknown id

  const std::vector<ConsumerEdge>& consumers(int index) const {
    return consumers_.at(index);
  }
  bool IsTerminal(int index) const { return consumers_.at(index).empty(); }

  const std::vector<PruneUnit>& units() const { return units_; }
  int num_units() const { return static_cast<int>(units_.size()); }
  int UnitOf(int layer_index) const { return unit_of_.at(layer_index); }

  Survivors FullSurvivors() const;
  KeptCounts KeptFromSurvivors(const Survivors& survivors) const;
  // Per-layer kept counts from per-unit kept counts.
  KeptCounts KeptFromUnitCounts(std::span<const int> unit_counts) const;

  nlohmann::json ToJson() const;

 private:
  std::string name_;
  InputSpec input_;
  std::vector<LayerSpec> layers_;
  std::map<std::string, int, std::less<>> index_;
  std::vector<std::vector<ConsumerEdge>> consumers_;
  std::vector<PruneUnit> units_;
  std::vector<int> unit_of_;
};

NetworkSpec NetworkSpecFromJson(const nlohmann::json& doc);
NetworkSpec ParseNetworkSpec(std::string_view text);

struct EffectiveWidth {
  int in = 0;
  int out = 0;

  bool operator==(const EffectiveWidth&) const = default;
};

// Input/output widths of every layer once `kept` filters survive: consumers
// lose the input channels of pruned producer filters. Indexed like layers().
std::vector<EffectiveWidth> EffectiveWidths(const NetworkSpec& spec,
                                            std::span<const int> kept);

// Resolves a KeptCounts map into a per-layer vector, checking bounds and
// coupling-group agreement.
std::vector<int> ResolveKept(const NetworkSpec& spec, const KeptCounts& kept);

std::map<std::string, EffectiveWidth> PassivePruneView(const NetworkSpec& spec,
                                                       const KeptCounts& kept);

// Multiply-accumulate count of the (possibly pruned) network.
int64_t CountFlops(const NetworkSpec& spec, const KeptCounts& kept);
int64_t CountFlops(const NetworkSpec& spec, std::span<const int> kept);

// Which input channels of `layer_index` remain readable when only the
// `survivors` filters are kept.
std::vector<bool> AliveInputChannels(const NetworkSpec& spec,
                                     const Survivors& survivors,
                                     int layer_index);

}  // namespace latprune

#endif  // LATPRUNE_NETWORK_H_

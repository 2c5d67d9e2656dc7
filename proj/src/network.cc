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

#include "latprune/network.h"

#include <algorithm>
#include <queue>
#include <set>
#include <utility>

#include "latprune/error.h"

namespace latprune {
namespace {

std::string LayerError(const std::string& id, const std::string& what) {
  return "layer " + id + ": " + what;
}

LayerKind ParseKind(const std::string& id, const std::string& kind) {
  if (kind == "conv") return LayerKind::kConv;
  if (kind == "dense") return LayerKind::kDense;
  ThrowInvalid(LayerError(id, "unknown kind '" + kind + "'"));
}

Combine ParseCombine(const std::string& id, const std::string& combine) {
  if (combine == "single") return Combine::kSingle;
  if (combine == "add") return Combine::kAdd;
  if (combine == "concat") return Combine::kConcat;
  ThrowInvalid(LayerError(id, "unknown combine '" + combine + "'"));
}

const char* KindName(LayerKind kind) {
  return kind == LayerKind::kConv ? "conv" : "dense";
}

const char* CombineName(Combine combine) {
  switch (combine) {
    case Combine::kSingle:
      return "single";
    case Combine::kAdd:
      return "add";
    case Combine::kConcat:
      return "concat";
  }
  return "single";
}

template <typename T>
T Field(const nlohmann::json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) ThrowInvalid(where + ": missing field '" + key + "'");
  try {
    return it->get<T>();
  } catch (const nlohmann::json::exception&) {
    ThrowInvalid(where + ": field '" + key + "' has the wrong type");
  }
}

void CheckPositive(const std::string& id, const char* what, int value) {
  if (value <= 0) {
    ThrowInvalid(LayerError(id, std::string("non-positive dimension ") + what +
                                    "=" + std::to_string(value)));
  }
}

}  // namespace

NetworkSpec NetworkSpec::Create(std::string name, InputSpec input,
                                std::vector<LayerSpec> layers) {
  if (input.channels <= 0 || input.h <= 0 || input.w <= 0) {
    ThrowInvalid("input: non-positive dimension");
  }

  const int n = static_cast<int>(layers.size());
  std::map<std::string, int, std::less<>> file_index;
  for (int i = 0; i < n; ++i) {
    const LayerSpec& layer = layers[i];
    if (layer.id.empty()) ThrowInvalid("layer #" + std::to_string(i) + ": empty id");
    if (layer.id == kInputId) {
      ThrowInvalid(LayerError(layer.id, "id 'input' is reserved"));
    }
    if (!file_index.emplace(layer.id, i).second) {
      ThrowInvalid(LayerError(layer.id, "duplicate id"));
    }
    CheckPositive(layer.id, "out", layer.out_channels);
    CheckPositive(layer.id, "kh", layer.kernel_h);
    CheckPositive(layer.id, "kw", layer.kernel_w);
    CheckPositive(layer.id, "out_h", layer.out_h);
    CheckPositive(layer.id, "out_w", layer.out_w);
    if (layer.kind == LayerKind::kDense &&
        (layer.kernel_h != 1 || layer.kernel_w != 1 || layer.out_h != 1 ||
         layer.out_w != 1)) {
      ThrowInvalid(LayerError(layer.id, "dense layers must be 1x1 with 1x1 output"));
    }
    if (layer.producers.empty()) {
      ThrowInvalid(LayerError(layer.id, "no producers"));
    }
  }

  // Resolve producers to file indices and check combine consistency.
  std::vector<std::vector<int>> deps(n);
  for (int i = 0; i < n; ++i) {
    LayerSpec& layer = layers[i];
    layer.combine = layer.producers.front().combine;
    for (const Producer& p : layer.producers) {
      if (p.combine != layer.combine) {
        ThrowInvalid(LayerError(layer.id, "producers disagree on combine"));
      }
      if (p.from == kInputId) continue;
      auto it = file_index.find(p.from);
      if (it == file_index.end()) {
        ThrowInvalid(LayerError(layer.id, "unknown producer " + p.from));
      }
      if (it->second == i) ThrowInvalid(LayerError(layer.id, "cycle detected"));
      deps[i].push_back(it->second);
    }
    if (layer.combine == Combine::kSingle && layer.producers.size() != 1) {
      ThrowInvalid(LayerError(layer.id, "single combine needs exactly one producer"));
    }
  }

  // Kahn's algorithm, always releasing the earliest layer in file order so a
  // file that is already topologically sorted keeps its order.
  std::vector<int> pending(n, 0);
  std::vector<std::vector<int>> dependents(n);
  for (int i = 0; i < n; ++i) {
    for (int d : deps[i]) {
      ++pending[i];
      dependents[d].push_back(i);
    }
  }
  std::priority_queue<int, std::vector<int>, std::greater<>> ready;
  for (int i = 0; i < n; ++i) {
    if (pending[i] == 0) ready.push(i);
  }
  std::vector<int> order;
  order.reserve(n);
  while (!ready.empty()) {
    const int i = ready.top();
    ready.pop();
    order.push_back(i);
    for (int d : dependents[i]) {
      if (--pending[d] == 0) ready.push(d);
    }
  }
  if (static_cast<int>(order.size()) != n) {
    for (int i = 0; i < n; ++i) {
      if (pending[i] > 0) ThrowInvalid(LayerError(layers[i].id, "cycle detected"));
    }
  }

  NetworkSpec spec;
  spec.name_ = std::move(name);
  spec.input_ = input;
  spec.layers_.reserve(n);
  for (int i : order) spec.layers_.push_back(std::move(layers[i]));
  for (int i = 0; i < n; ++i) spec.index_.emplace(spec.layers_[i].id, i);

  spec.consumers_.assign(n, {});
  for (int i = 0; i < n; ++i) {
    LayerSpec& layer = spec.layers_[i];
    layer.producer_index.clear();
    int in_channels = 0;
    int offset = 0;
    for (const Producer& p : layer.producers) {
      const int pi = p.from == kInputId ? kInputIndex : spec.index_.at(p.from);
      layer.producer_index.push_back(pi);
      const int width =
          pi == kInputIndex ? input.channels : spec.layers_[pi].out_channels;
      if (pi != kInputIndex) {
        spec.consumers_[pi].push_back(
            {i, layer.combine == Combine::kConcat ? offset : 0});
      }
      switch (layer.combine) {
        case Combine::kSingle:
          in_channels = width;
          break;
        case Combine::kAdd:
          if (in_channels != 0 && in_channels != width) {
            ThrowInvalid(LayerError(layer.id, "add-combine channel mismatch"));
          }
          in_channels = width;
          break;
        case Combine::kConcat:
          in_channels += width;
          offset += width;
          break;
      }
    }
    layer.in_channels = in_channels;
  }

  // Coupling groups and prune units.
  std::map<std::string, std::vector<int>> groups;
  for (int i = 0; i < n; ++i) {
    const LayerSpec& layer = spec.layers_[i];
    if (layer.coupling_group) groups[*layer.coupling_group].push_back(i);
  }
  for (const auto& [group, members] : groups) {
    if (spec.index_.contains(group)) {
      ThrowInvalid("coupling group " + group + ": name collides with a layer id");
    }
    for (int m : members) {
      if (spec.layers_[m].out_channels != spec.layers_[members.front()].out_channels) {
        ThrowInvalid(LayerError(spec.layers_[m].id,
                                "coupling group " + group + " width mismatch"));
      }
    }
  }
  for (int i = 0; i < n; ++i) {
    const LayerSpec& layer = spec.layers_[i];
    if (layer.combine != Combine::kAdd) continue;
    std::optional<std::string> shared;
    bool first = true;
    for (int pi : layer.producer_index) {
      if (pi == kInputIndex) continue;
      const auto& g = spec.layers_[pi].coupling_group;
      if (!g || (!first && g != shared)) {
        ThrowInvalid(LayerError(layer.id, "add-combine producers must share a coupling group"));
      }
      shared = g;
      first = false;
    }
  }

  spec.unit_of_.assign(n, -1);
  std::map<std::string, int> group_unit;
  for (int i = 0; i < n; ++i) {
    const LayerSpec& layer = spec.layers_[i];
    if (layer.coupling_group) {
      auto [it, inserted] =
          group_unit.emplace(*layer.coupling_group, spec.num_units());
      if (inserted) {
        spec.units_.push_back({*layer.coupling_group, {}, layer.out_channels});
      }
      spec.units_[it->second].members.push_back(i);
      spec.unit_of_[i] = it->second;
    } else {
      spec.unit_of_[i] = spec.num_units();
      spec.units_.push_back({layer.id, {i}, layer.out_channels});
    }
  }
  return spec;
}

std::optional<int> NetworkSpec::Find(std::string_view id) const {
  auto it = index_.find(id);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

int NetworkSpec::IndexOf(std::string_view id) const {
  auto found = Find(id);
  if (!found) ThrowInvalid("unknown layer " + std::string(id));
  return *found;
}

Survivors NetworkSpec::FullSurvivors() const {
  Survivors survivors(units_.size());
  for (size_t u = 0; u < units_.size(); ++u) {
    survivors[u].resize(units_[u].width);
    for (int k = 0; k < units_[u].width; ++k) survivors[u][k] = k;
  }
  return survivors;
}

KeptCounts NetworkSpec::KeptFromSurvivors(const Survivors& survivors) const {
  std::vector<int> counts;
  counts.reserve(survivors.size());
  for (const auto& s : survivors) counts.push_back(static_cast<int>(s.size()));
  return KeptFromUnitCounts(counts);
}

KeptCounts NetworkSpec::KeptFromUnitCounts(std::span<const int> unit_counts) const {
  KeptCounts kept;
  for (int i = 0; i < num_layers(); ++i) {
    kept[layers_[i].id] = unit_counts[unit_of_[i]];
  }
  return kept;
}

nlohmann::json NetworkSpec::ToJson() const {
  nlohmann::json layers = nlohmann::json::array();
  for (const LayerSpec& layer : layers_) {
    nlohmann::json producers = nlohmann::json::array();
    for (const Producer& p : layer.producers) {
      producers.push_back({{"from", p.from}, {"combine", CombineName(p.combine)}});
    }
    nlohmann::json entry = {{"id", layer.id},
                            {"kind", KindName(layer.kind)},
                            {"out", layer.out_channels},
                            {"kh", layer.kernel_h},
                            {"kw", layer.kernel_w},
                            {"out_h", layer.out_h},
                            {"out_w", layer.out_w},
                            {"producers", producers}};
    if (layer.coupling_group) entry["coupling"] = *layer.coupling_group;
    layers.push_back(std::move(entry));
  }
  return {{"name", name_},
          {"input", {{"channels", input_.channels}, {"h", input_.h}, {"w", input_.w}}},
          {"layers", layers}};
}

NetworkSpec NetworkSpecFromJson(const nlohmann::json& doc) {
  if (!doc.is_object()) ThrowInvalid("network spec: expected a JSON object");
  const std::string name = doc.contains("name") ? Field<std::string>(doc, "name", "network spec") : "";
  const nlohmann::json input_json = Field<nlohmann::json>(doc, "input", "network spec");
  InputSpec input{Field<int>(input_json, "channels", "input"),
                  Field<int>(input_json, "h", "input"),
                  Field<int>(input_json, "w", "input")};
  const nlohmann::json layers_json = Field<nlohmann::json>(doc, "layers", "network spec");
  if (!layers_json.is_array()) ThrowInvalid("network spec: 'layers' must be an array");

  std::vector<LayerSpec> layers;
  for (const nlohmann::json& lj : layers_json) {
    if (!lj.is_object()) ThrowInvalid("network spec: layer entries must be objects");
    LayerSpec layer;
    layer.id = Field<std::string>(lj, "id", "layer");
    const std::string where = "layer " + layer.id;
    layer.kind = ParseKind(layer.id, Field<std::string>(lj, "kind", where));
    layer.out_channels = Field<int>(lj, "out", where);
    const bool dense = layer.kind == LayerKind::kDense;
    auto dim = [&](const char* key) {
      if (dense && !lj.contains(key)) return 1;
      return Field<int>(lj, key, where);
    };
    layer.kernel_h = dim("kh");
    layer.kernel_w = dim("kw");
    layer.out_h = dim("out_h");
    layer.out_w = dim("out_w");
    for (const nlohmann::json& pj : Field<nlohmann::json>(lj, "producers", where)) {
      Producer p;
      p.from = Field<std::string>(pj, "from", where + " producer");
      p.combine = pj.contains("combine")
                      ? ParseCombine(layer.id, Field<std::string>(pj, "combine", where))
                      : Combine::kSingle;
      layer.producers.push_back(std::move(p));
    }
    if (lj.contains("coupling") && !lj["coupling"].is_null()) {
      layer.coupling_group = Field<std::string>(lj, "coupling", where);
    }
    layers.push_back(std::move(layer));
  }
  return NetworkSpec::Create(name, input, std::move(layers));
}

NetworkSpec ParseNetworkSpec(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    ThrowInvalid(std::string("network spec: malformed JSON: ") + e.what());
  }
  return NetworkSpecFromJson(doc);
}

std::vector<int> ResolveKept(const NetworkSpec& spec, const KeptCounts& kept) {
  std::vector<int> counts(spec.num_layers());
  for (int i = 0; i < spec.num_layers(); ++i) {
    counts[i] = spec.layer(i).out_channels;
  }
  for (const auto& [id, count] : kept) {
    const int i = spec.IndexOf(id);
    if (count < 0 || count > spec.layer(i).out_channels) {
      ThrowInvalid(LayerError(id, "kept count " + std::to_string(count) +
                                      " outside [0, " +
                                      std::to_string(spec.layer(i).out_channels) + "]"));
    }
    counts[i] = count;
  }
  for (const PruneUnit& unit : spec.units()) {
    for (int m : unit.members) {
      if (counts[m] != counts[unit.members.front()]) {
        ThrowInvalid("coupling group " + unit.key + ": members have unequal kept counts");
      }
    }
  }
  return counts;
}

std::vector<EffectiveWidth> EffectiveWidths(const NetworkSpec& spec,
                                            std::span<const int> kept) {
  std::vector<EffectiveWidth> widths(spec.num_layers());
  for (int i = 0; i < spec.num_layers(); ++i) {
    const LayerSpec& layer = spec.layer(i);
    int in = 0;
    for (int pi : layer.producer_index) {
      const int w = pi == kInputIndex ? spec.input().channels : widths[pi].out;
      if (layer.combine == Combine::kConcat) {
        in += w;
      } else {
        // Coupled add producers share a width; the input may exceed them.
        in = std::max(in, w);
      }
    }
    widths[i] = {in, kept[i]};
  }
  return widths;
}

std::map<std::string, EffectiveWidth> PassivePruneView(const NetworkSpec& spec,
                                                       const KeptCounts& kept) {
  const std::vector<int> counts = ResolveKept(spec, kept);
  const std::vector<EffectiveWidth> widths = EffectiveWidths(spec, counts);
  std::map<std::string, EffectiveWidth> view;
  for (int i = 0; i < spec.num_layers(); ++i) view[spec.layer(i).id] = widths[i];
  return view;
}

int64_t CountFlops(const NetworkSpec& spec, std::span<const int> kept) {
  const std::vector<EffectiveWidth> widths = EffectiveWidths(spec, kept);
  int64_t total = 0;
  for (int i = 0; i < spec.num_layers(); ++i) {
    const LayerSpec& layer = spec.layer(i);
    total += int64_t{widths[i].in} * widths[i].out * layer.KernelArea() *
             layer.OutputArea();
  }
  return total;
}

int64_t CountFlops(const NetworkSpec& spec, const KeptCounts& kept) {
  return CountFlops(spec, ResolveKept(spec, kept));
}

std::vector<bool> AliveInputChannels(const NetworkSpec& spec,
                                     const Survivors& survivors,
                                     int layer_index) {
  const LayerSpec& layer = spec.layer(layer_index);
  std::vector<bool> alive(layer.in_channels, false);
  int offset = 0;
  for (int pi : layer.producer_index) {
    if (pi == kInputIndex) {
      for (int k = 0; k < spec.input().channels; ++k) alive[offset + k] = true;
    } else {
      for (int k : survivors.at(spec.UnitOf(pi))) alive[offset + k] = true;
    }
    if (layer.combine == Combine::kConcat) {
      offset += pi == kInputIndex ? spec.input().channels
                                  : spec.layer(pi).out_channels;
    }
  }
  return alive;
}

}  // namespace latprune
